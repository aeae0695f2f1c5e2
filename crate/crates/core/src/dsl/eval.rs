use thiserror::Error;

use super::{BinOp, CmpOp, Expr, Func, Predicate};
use crate::geometry::Point;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("non-finite value reached a comparison: {0}")]
    NonFinite(String),
    #[error("point has dimension {found}, predicate expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numeric expression used as a predicate")]
    NotBoolean,
}

impl Predicate {
    /// Evaluates the predicate at `x`. Comparisons on NaN or infinite
    /// operands are errors rather than `false`.
    pub fn evaluate<T: Real>(&self, x: &Point<T>) -> Result<bool, EvalError> {
        if x.dim() != self.dimension {
            return Err(EvalError::DimensionMismatch {
                expected: self.dimension,
                found: x.dim(),
            });
        }
        eval_bool(&self.expr, x.coords())
    }
}

fn eval_bool<T: Real>(e: &Expr, x: &[T]) -> Result<bool, EvalError> {
    match e {
        Expr::Bool(b) => Ok(*b),
        Expr::Not(inner) => Ok(!eval_bool(inner, x)?),
        Expr::And(a, b) => {
            let (a, b) = (eval_bool(a, x)?, eval_bool(b, x)?);
            Ok(a && b)
        }
        Expr::Or(a, b) => {
            let (a, b) = (eval_bool(a, x)?, eval_bool(b, x)?);
            Ok(a || b)
        }
        Expr::Compare(op, a, b) => {
            let lhs = eval_num(a, x);
            let rhs = eval_num(b, x);
            if !lhs.is_finite() || !rhs.is_finite() {
                return Err(EvalError::NonFinite(format!("{lhs} {} {rhs}", op.symbol())));
            }
            Ok(match op {
                CmpOp::Lt => lhs < rhs,
                CmpOp::Le => lhs <= rhs,
                CmpOp::Gt => lhs > rhs,
                CmpOp::Ge => lhs >= rhs,
                CmpOp::Eq => lhs == rhs,
            })
        }
        _ => Err(EvalError::NotBoolean),
    }
}

fn eval_num<T: Real>(e: &Expr, x: &[T]) -> T {
    match e {
        Expr::Num(v) => T::lit(*v),
        Expr::Var(i) => x[*i - 1],
        Expr::Neg(inner) => -eval_num(inner, x),
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval_num(a, x), eval_num(b, x));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
        Expr::Call(f, inner) => {
            let v = eval_num(inner, x);
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Abs => v.abs(),
            }
        }
        // Rejected by the kind check before any predicate is built.
        Expr::Bool(_) | Expr::Compare(..) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => T::nan(),
    }
}
