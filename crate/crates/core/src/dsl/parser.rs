use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, CmpOp, DslError, Expr, Func};

pub(super) fn parse(text: &str, dimension: usize) -> Result<Expr, DslError> {
    if text.trim().is_empty() {
        return Err(DslError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        dimension,
    };
    let e = p.or_expr()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected("end of input"));
    }
    e.kind()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dimension: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        DslError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), DslError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn or_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.and_expr()?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.not_expr()?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, DslError> {
        if self.is_keyword("not") {
            self.bump();
            let inner = self.not_expr()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.cmp_expr()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Le => Some(CmpOp::Le),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Ge => Some(CmpOp::Ge),
            Tok::EqEq => Some(CmpOp::Eq),
            _ => None,
        }
    }

    fn cmp_expr(&mut self) -> Result<Expr, DslError> {
        let lhs = self.add_expr()?;
        let Some(op) = self.cmp_op() else {
            return Ok(lhs);
        };
        self.bump();
        let rhs = self.add_expr()?;
        if self.cmp_op().is_some() {
            return Err(DslError::Syntax {
                offset: self.offset(),
                message: "comparisons do not chain; combine them with `and`".into(),
            });
        }
        Ok(Expr::Compare(op, Box::new(lhs), Box::new(rhs)))
    }

    fn add_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.or_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(&name, offset)
            }
            _ => Err(self.unexpected("a number, variable, function call or `(`")),
        }
    }

    fn identifier(&mut self, name: &str, offset: usize) -> Result<Expr, DslError> {
        match name {
            "true" => return Ok(Expr::Bool(true)),
            "false" => return Ok(Expr::Bool(false)),
            "and" | "or" | "not" => {
                return Err(DslError::Syntax {
                    offset,
                    message: format!("keyword `{name}` cannot start an operand"),
                })
            }
            _ => {}
        }
        if let Some(func) = Func::from_name(name) {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let mut args = vec![self.or_expr()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.or_expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            if args.len() != 1 {
                return Err(DslError::Arity {
                    function: name.to_string(),
                    expected: 1,
                    found: args.len(),
                });
            }
            return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| DslError::Dimension {
                    index: usize::MAX,
                    dimension: self.dimension,
                })?;
                if index == 0 || index > self.dimension {
                    return Err(DslError::Dimension {
                        index,
                        dimension: self.dimension,
                    });
                }
                return Ok(Expr::Var(index));
            }
        }
        Err(DslError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        })
    }
}
