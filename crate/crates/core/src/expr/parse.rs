//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' '-'? integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Chart, Expr, Func};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

/// Parse `text` into an expression whose variables are coordinates of `chart`.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, chart };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(self.term()?.neg());
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                acc = acc.mul(&rhs);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                acc = acc.div(&rhs);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(self.factor()?.neg());
        }
        let b = self.base()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: i64 = digits.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: "exponent out of range".into(),
            })?;
            return Ok(b.pow(if neg { -n } else { n }));
        }
        Ok(b)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if let Some(f) = Func::from_name(name) {
                    if self.eat(b'(') {
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected `)`"));
                        }
                        return Ok(Expr::apply(f, &arg));
                    }
                }
                if self.chart.contains(name) {
                    Ok(Expr::var(name))
                } else {
                    Err(ParseError::UnknownIdentifier { pos: start, name: name.to_string() })
                }
            }
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    /// Decimal literal with optional fraction and exponent, converted exactly.
    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int_part.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                frac_part.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseError::Syntax { pos: start, msg: "malformed number".into() });
        }
        let mut exp: i64 = 0;
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
                if self.src[self.pos] == b'-' {
                    sign = -1;
                }
                self.pos += 1;
            }
            let es = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if es == self.pos {
                self.pos = save;
            } else {
                let d = std::str::from_utf8(&self.src[es..self.pos]).unwrap();
                exp = sign * d.parse::<i64>().map_err(|_| ParseError::Syntax {
                    pos: es,
                    msg: "exponent out of range".into(),
                })?;
            }
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
        let scale = exp - frac_part.len() as i64;
        let ten = BigInt::from(10);
        let mut pow = BigInt::one();
        for _ in 0..scale.unsigned_abs() {
            pow *= &ten;
        }
        let value = if scale >= 0 {
            BigRational::from_integer(mantissa * pow)
        } else {
            BigRational::new(mantissa, pow)
        };
        Ok(Expr::constant(value))
    }
}
