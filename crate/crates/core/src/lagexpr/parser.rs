use super::lexer::{lex, Tok, Token};
use super::{Axis, BinOp, Expr, Func, JetVar, MAX_MULTIPLICITY};
use crate::error::{Error, Result};

/// Parse a Lagrangian density. The parser builds the tree exactly as
/// written; no folding is applied.
pub fn parse(src: &str) -> Result<Expr> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(p.error_at(t, "unexpected trailing input"));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.error_at(&t, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while self.peek().tok == Tok::Caret {
            self.next();
            let negative = if self.peek().tok == Tok::Minus {
                self.next();
                true
            } else {
                false
            };
            let t = self.next();
            let n = match &t.tok {
                Tok::Num(_, text) => text
                    .parse::<i32>()
                    .map_err(|_| self.error_at(&t, "exponent must be an integer literal"))?,
                _ => return Err(self.error_at(&t, "expected integer exponent")),
            };
            base = Expr::Pow(Box::new(base), if negative { -n } else { n });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v, _) => Ok(Expr::Num(*v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "D" && self.peek().tok == Tok::LBracket => self.jet(),
            Tok::Ident(name) if self.peek().tok == Tok::LParen => {
                let f = Func::from_name(name)
                    .ok_or_else(|| self.error_at(&t, format!("unknown function `{name}`")))?;
                self.next();
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(f, Box::new(arg)))
            }
            Tok::Ident(name) => Ok(match name.as_str() {
                "t" => Expr::Coord(Axis::T),
                "x" => Expr::Coord(Axis::X),
                _ => Expr::Jet(JetVar::field(name.clone())),
            }),
            _ => Err(self.error_at(&t, "expected a number, identifier or `(`")),
        }
    }

    fn jet(&mut self) -> Result<Expr> {
        self.expect(Tok::LBracket, "`[`")?;
        let t = self.next();
        let field = match &t.tok {
            Tok::Ident(n) if n != "t" && n != "x" => n.clone(),
            _ => return Err(self.error_at(&t, "expected field name")),
        };
        self.expect(Tok::Comma, "`,`")?;
        let t = self.next();
        let axis = match &t.tok {
            Tok::Ident(n) if n == "t" => Axis::T,
            Tok::Ident(n) if n == "x" => Axis::X,
            _ => return Err(self.error_at(&t, "expected axis `t` or `x`")),
        };
        self.expect(Tok::Comma, "`,`")?;
        let t = self.next();
        let m = match &t.tok {
            Tok::Num(_, text) => text
                .parse::<u32>()
                .map_err(|_| self.error_at(&t, "multiplicity must be a positive integer"))?,
            _ => return Err(self.error_at(&t, "expected multiplicity")),
        };
        if m == 0 {
            return Err(self.error_at(&t, "multiplicity must be at least 1"));
        }
        if m > MAX_MULTIPLICITY as u32 {
            return Err(self.error_at(&t, format!("multiplicity {m} exceeds {MAX_MULTIPLICITY}")));
        }
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Expr::Jet(JetVar::derivative(field, axis, m as u8)))
    }
}
