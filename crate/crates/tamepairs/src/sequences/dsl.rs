//! Tiny surface syntax for exponent sequences.
//!
//! ```text
//! n          3*n        2*n-1      n+4       affine
//! n^2        n^1.5                           power
//! ln(n+1)                                    logarithmic
//! 2^n        1.5^n                           geometric
//! n!                                         factorial
//! exp(n^2)   exp(n)                          e^{n^p}
//! 2*n!       0.5*merge(n,n^2)                scaled
//! merge(a,b)                                 sorted union
//! table:[1,2,3.5]                            explicit prefix
//! ```

use super::{Descriptor, ExponentSequence};
use crate::error::{Error, Result};

pub fn parse_sequence(text: &str) -> Result<ExponentSequence> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let d = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::parse(p.pos, "trailing input after sequence expression"));
    }
    ExponentSequence::new(d)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn expr(&mut self) -> Result<Descriptor> {
        self.skip_ws();
        if self.peek_number() {
            let value = self.number()?;
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.scaled_tail(value)
                }
                Some(b'^') => {
                    self.pos += 1;
                    self.expect(b'n', "expected 'n' after '^' in geometric base")?;
                    Ok(Descriptor::Geometric { base: value })
                }
                _ => Err(Error::parse(
                    self.pos,
                    "expected '*' (scale) or '^n' (geometric) after leading number",
                )),
            }
        } else {
            self.atom()
        }
    }

    /// After `c*`: either an affine `c*n±b` or a scaled copy of any atom.
    fn scaled_tail(&mut self, factor: f64) -> Result<Descriptor> {
        self.skip_ws();
        if self.peek() == Some(b'n') && !self.lookahead_power_or_factorial() {
            self.pos += 1;
            let intercept = self.optional_intercept()?;
            return Ok(Descriptor::Affine {
                slope: factor,
                intercept,
            });
        }
        let inner = self.atom()?;
        Ok(Descriptor::Scaled {
            factor,
            inner: Box::new(inner),
        })
    }

    fn atom(&mut self) -> Result<Descriptor> {
        self.skip_ws();
        if self.eat_keyword("ln(") {
            self.expect(b'n', "expected 'n' inside ln(...)")?;
            self.skip_ws();
            self.expect(b'+', "expected '+' inside ln(n+c)")?;
            let offset = self.number()?;
            self.expect(b')', "expected ')' closing ln(n+c)")?;
            return Ok(Descriptor::Logarithmic { offset });
        }
        if self.eat_keyword("exp(") {
            self.expect(b'n', "expected 'n' inside exp(...)")?;
            self.skip_ws();
            let exponent = if self.peek() == Some(b'^') {
                self.pos += 1;
                self.number()?
            } else {
                1.0
            };
            self.expect(b')', "expected ')' closing exp(n^p)")?;
            return Ok(Descriptor::ExpPower { exponent });
        }
        if self.eat_keyword("merge(") {
            let left = self.expr()?;
            self.skip_ws();
            self.expect(b',', "expected ',' between merge arguments")?;
            let right = self.expr()?;
            self.skip_ws();
            self.expect(b')', "expected ')' closing merge(a,b)")?;
            return Ok(Descriptor::Merge {
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        if self.eat_keyword("table:") {
            return self.table();
        }
        if self.peek() == Some(b'n') {
            self.pos += 1;
            match self.peek() {
                Some(b'!') => {
                    self.pos += 1;
                    return Ok(Descriptor::Factorial);
                }
                Some(b'^') => {
                    self.pos += 1;
                    let exponent = self.number()?;
                    return Ok(Descriptor::Power { exponent });
                }
                _ => {
                    let intercept = self.optional_intercept()?;
                    return Ok(Descriptor::Affine {
                        slope: 1.0,
                        intercept,
                    });
                }
            }
        }
        Err(Error::parse(self.pos, "expected a sequence expression"))
    }

    fn table(&mut self) -> Result<Descriptor> {
        self.skip_ws();
        self.expect(b'[', "expected '[' after table:")?;
        let mut values = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b']') {
                self.pos += 1;
                break;
            }
            values.push(self.number()?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(Error::parse(self.pos, "expected ',' or ']' in table")),
            }
        }
        Ok(Descriptor::Table { values })
    }

    fn optional_intercept(&mut self) -> Result<f64> {
        self.skip_ws();
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                self.number()
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.number()?)
            }
            _ => Ok(0.0),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_number(&self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_digit())
    }

    /// True when the upcoming `n` is part of `n^...` or `n!`.
    fn lookahead_power_or_factorial(&self) -> bool {
        let mut i = self.pos + 1;
        while i < self.src.len() && self.src[i] == b' ' {
            i += 1;
        }
        matches!(self.src.get(i), Some(b'^') | Some(b'!'))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.src[self.pos..].starts_with(kw.as_bytes()) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, byte: u8, msg: &str) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::parse(self.pos, msg))
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "expected a number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::parse(start, "malformed number"))
    }

    fn skip_ws(&mut self) {
        while self.peek() == Some(b' ') {
            self.pos += 1;
        }
    }
}
