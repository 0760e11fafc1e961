use super::lexer::{Tok, Token};
use super::{BinOp, Expr, ExprError, Func};

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    variables: &'a [&'a str],
    parameters: &'a [&'a str],
}

pub fn parse_tokens(
    tokens: &[Token],
    source_len: usize,
    variables: &[&str],
    parameters: &[&str],
) -> Result<Expr, ExprError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        end: source_len,
        variables,
        parameters,
    };
    if tokens.is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let expr = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ExprError::Syntax {
            pos: t.pos,
            msg: format!("unexpected trailing token {:?}", t.tok),
        });
    }
    Ok(expr)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if &t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ExprError::Syntax {
                pos: t.pos,
                msg: format!("expected {what}, found {:?}", t.tok),
            }),
            None => Err(ExprError::Syntax {
                pos: self.end,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let op = match t.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            let op = match t.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // unary := '-' unary | power
    // `^` binds tighter than unary minus: -x^2 parses as -(x^2).
    fn unary(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus)) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    // power := atom ('^' unary)?  -- right-associative
    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Caret)) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let t = match self.bump() {
            Some(t) => t.clone(),
            None => {
                return Err(ExprError::Syntax {
                    pos: self.end,
                    msg: "unexpected end of input".into(),
                })
            }
        };
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(t) if t.tok == Tok::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(ExprError::Syntax {
                        pos: self.here(),
                        msg: "unbalanced parenthesis".into(),
                    }),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen)) {
                    let func = Func::from_name(&name).ok_or_else(|| ExprError::UnknownIdentifier {
                        name: name.clone(),
                    })?;
                    self.pos += 1; // consume '('
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek().map(|t| &t.tok), Some(Tok::Comma)) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(&Tok::RParen, "`)`")?;
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            name: func.name(),
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    self.resolve(&name)
                }
            }
            other => Err(ExprError::Syntax {
                pos: t.pos,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn resolve(&self, name: &str) -> Result<Expr, ExprError> {
        if let Some(index) = self.variables.iter().position(|v| *v == name) {
            return Ok(Expr::Var {
                index,
                name: name.to_string(),
            });
        }
        if let Some(index) = self.parameters.iter().position(|p| *p == name) {
            return Ok(Expr::Param {
                index,
                name: name.to_string(),
            });
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
        })
    }
}
