use std::fmt;

use super::{BinOp, CmpOp, Expr};

const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const UNARY: u8 = 7;
const ATOM: u8 = 8;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => OR,
        Expr::And(..) => AND,
        Expr::Not(_) => NOT,
        Expr::Compare(..) => CMP,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Expr::Neg(_) => UNARY,
        Expr::Num(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Call(..) => ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }
}

/// Prints with the fewest parentheses that re-parse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                child(f, e, UNARY)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => {
                let (p, sym) = match op {
                    BinOp::Add => (ADD, " + "),
                    BinOp::Sub => (ADD, " - "),
                    BinOp::Mul => (MUL, " * "),
                    BinOp::Div => (MUL, " / "),
                };
                child(f, a, p)?;
                f.write_str(sym)?;
                child(f, b, p + 1)
            }
            Expr::Compare(op, a, b) => {
                child(f, a, ADD)?;
                write!(f, " {} ", op.symbol())?;
                child(f, b, ADD)
            }
            Expr::Not(e) => {
                f.write_str("not ")?;
                child(f, e, NOT)
            }
            Expr::And(a, b) => {
                child(f, a, AND)?;
                f.write_str(" and ")?;
                child(f, b, AND + 1)
            }
            Expr::Or(a, b) => {
                child(f, a, OR)?;
                f.write_str(" or ")?;
                child(f, b, OR + 1)
            }
        }
    }
}
