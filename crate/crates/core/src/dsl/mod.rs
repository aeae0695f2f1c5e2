//! Analytic region predicates.
//!
//! A small expression language over `x1..xn`:
//!
//! ```text
//! or_expr   = and_expr { "or" and_expr } ;
//! and_expr  = not_expr { "and" not_expr } ;
//! not_expr  = "not" not_expr | cmp_expr ;
//! cmp_expr  = add_expr [ ( "<" | "<=" | ">" | ">=" | "==" ) add_expr ] ;
//! add_expr  = mul_expr { ( "+" | "-" ) mul_expr } ;
//! mul_expr  = unary { ( "*" | "/" ) unary } ;
//! unary     = "-" unary | call ;
//! call      = func "(" or_expr { "," or_expr } ")" | atom ;
//! atom      = number | variable | "true" | "false" | "(" or_expr ")" ;
//! func      = "sin" | "cos" | "exp" | "abs" ;
//! variable  = "x" digit { digit } ;
//! number    = digits [ "." digits ] [ ( "e" | "E" ) [ "+" | "-" ] digits ] ;
//! ```
//!
//! Trigonometric functions take radians. `==` is accepted but describes a
//! measure-zero set, which uniform sampling never hits. Both operands of
//! `and`/`or` are always evaluated.

mod eval;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use eval::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

/// Expression tree. Literals are nonnegative; negation is explicit.
/// Variables are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Number,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{function}` takes {expected} argument(s), got {found}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("variable x{index} out of range for dimension {dimension}")]
    Dimension { index: usize, dimension: usize },
    #[error("type error: {0}")]
    Type(String),
}

impl Expr {
    pub fn and(self, other: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Expr) -> Expr {
        Expr::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn compare(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Compare(op, Box::new(lhs), Box::new(rhs))
    }

    /// Signed literal: negative values become `Neg(Num(|v|))`.
    pub fn number(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    /// Infers the kind of the tree, enforcing the layering of arithmetic
    /// under comparisons under boolean connectives.
    pub fn kind(&self) -> Result<Kind, DslError> {
        let expect = |e: &Expr, want: Kind, ctx: &str| -> Result<(), DslError> {
            let k = e.kind()?;
            if k == want {
                Ok(())
            } else {
                Err(DslError::Type(format!(
                    "{ctx} expects a {} operand",
                    match want {
                        Kind::Number => "numeric",
                        Kind::Boolean => "boolean",
                    }
                )))
            }
        };
        match self {
            Expr::Num(_) | Expr::Var(_) => Ok(Kind::Number),
            Expr::Bool(_) => Ok(Kind::Boolean),
            Expr::Neg(e) => expect(e, Kind::Number, "negation").map(|_| Kind::Number),
            Expr::Call(f, e) => expect(e, Kind::Number, f.name()).map(|_| Kind::Number),
            Expr::Binary(_, a, b) => {
                expect(a, Kind::Number, "arithmetic")?;
                expect(b, Kind::Number, "arithmetic")?;
                Ok(Kind::Number)
            }
            Expr::Compare(_, a, b) => {
                expect(a, Kind::Number, "comparison")?;
                expect(b, Kind::Number, "comparison")?;
                Ok(Kind::Boolean)
            }
            Expr::Not(e) => expect(e, Kind::Boolean, "`not`").map(|_| Kind::Boolean),
            Expr::And(a, b) | Expr::Or(a, b) => {
                expect(a, Kind::Boolean, "boolean connective")?;
                expect(b, Kind::Boolean, "boolean connective")?;
                Ok(Kind::Boolean)
            }
        }
    }

    pub fn max_variable(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Bool(_) => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) | Expr::Call(_, e) | Expr::Not(e) => e.max_variable(),
            Expr::Binary(_, a, b) | Expr::Compare(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.max_variable().max(b.max_variable())
            }
        }
    }

    /// Every comparison node, in left-to-right order.
    pub fn comparisons(&self) -> Vec<(CmpOp, &Expr, &Expr)> {
        let mut out = Vec::new();
        self.collect_comparisons(&mut out);
        out
    }

    fn collect_comparisons<'a>(&'a self, out: &mut Vec<(CmpOp, &'a Expr, &'a Expr)>) {
        match self {
            Expr::Compare(op, a, b) => out.push((*op, a, b)),
            Expr::Not(e) => e.collect_comparisons(out),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_comparisons(out);
                b.collect_comparisons(out);
            }
            _ => {}
        }
    }
}

/// Parses `text` as an expression over `dimension` variables.
pub fn parse(text: &str, dimension: usize) -> Result<Expr, DslError> {
    parser::parse(text, dimension)
}

/// A boolean expression bound to a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    expr: Expr,
    dimension: usize,
}

impl Predicate {
    pub fn new(expr: Expr, dimension: usize) -> Result<Self, DslError> {
        let max = expr.max_variable();
        if max > dimension {
            return Err(DslError::Dimension {
                index: max,
                dimension,
            });
        }
        match expr.kind()? {
            Kind::Boolean => Ok(Predicate { expr, dimension }),
            Kind::Number => Err(DslError::Type(
                "predicate must be boolean, found a numeric expression".into(),
            )),
        }
    }

    pub fn parse(text: &str, dimension: usize) -> Result<Self, DslError> {
        Self::new(parse(text, dimension)?, dimension)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> String {
        self.expr.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize) -> Box<Expr> {
        Box::new(Expr::Var(i))
    }

    #[test]
    fn sine_boundary_parses_to_comparison_with_call() {
        let e = parse("x2 > 10*sin(0.1*x1)", 2).unwrap();
        let expected = Expr::Compare(
            CmpOp::Gt,
            var(2),
            Box::new(Expr::Binary(
                BinOp::Mul,
                Box::new(Expr::Num(10.0)),
                Box::new(Expr::Call(
                    Func::Sin,
                    Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Num(0.1)), var(1))),
                )),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn bare_variable_is_not_a_predicate() {
        let e = parse("x1", 1).unwrap();
        assert_eq!(e, Expr::Var(1));
        assert!(matches!(Predicate::new(e, 1), Err(DslError::Type(_))));
    }

    #[test]
    fn precedence_shapes() {
        // a + b * c
        let e = parse("x1 + x2 * x3", 3).unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                var(1),
                Box::new(Expr::Binary(BinOp::Mul, var(2), var(3)))
            )
        );
        // not a and b  ==  (not a) and b
        let e = parse("not x1 < 0 and x2 < 0", 2).unwrap();
        let lt = |i| Box::new(Expr::Compare(CmpOp::Lt, var(i), Box::new(Expr::Num(0.0))));
        assert_eq!(e, Expr::And(Box::new(Expr::Not(lt(1))), lt(2)));
        // or binds looser than and
        let e = parse("x1 < 0 or x2 < 0 and x1 > 0", 2).unwrap();
        assert!(matches!(e, Expr::Or(_, _)));
        // subtraction is left associative
        let e = parse("x1 - x2 - x3", 3).unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Binary(BinOp::Sub, var(1), var(2))),
                var(3)
            )
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse("x1 < ", 1),
            Err(DslError::Syntax { offset: 5, .. })
        ));
        assert!(matches!(
            parse("y < 1", 1),
            Err(DslError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("sin(x1, x2) < 1", 2),
            Err(DslError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse("x3 < 1", 2),
            Err(DslError::Dimension {
                index: 3,
                dimension: 2
            })
        ));
        assert!(matches!(
            parse("x0 < 1", 2),
            Err(DslError::Dimension { .. })
        ));
        assert!(matches!(parse("x1 and x2", 2), Err(DslError::Type(_))));
        assert!(matches!(parse("(x1 < 0) + 1", 1), Err(DslError::Type(_))));
        assert!(matches!(
            parse("x1 < x2 < 3", 2),
            Err(DslError::Syntax { .. })
        ));
        assert!(matches!(parse("", 2), Err(DslError::Syntax { .. })));
        assert!(matches!(
            parse("x1 < 1)", 2),
            Err(DslError::Syntax { offset: 6, .. })
        ));
    }

    #[test]
    fn comparisons_are_collected_in_order() {
        let e = parse("x1 < 0 or not x2 >= 1", 2).unwrap();
        let ops: Vec<CmpOp> = e.comparisons().into_iter().map(|c| c.0).collect();
        assert_eq!(ops, vec![CmpOp::Lt, CmpOp::Ge]);
    }
}
