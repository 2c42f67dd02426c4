use thiserror::Error;

use super::ast::StlFormula;

/// Error produced when formula text cannot be parsed; `offset` is the byte
/// position in the input where the problem was detected.
#[derive(Debug, Error, PartialEq)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

/// Parses a formula from its concrete syntax.
///
/// Grammar (whitespace-insensitive; `&` binds tighter than `|`):
///
/// ```text
/// formula := or
/// or      := and ("|" and)*
/// and     := unary ("&" unary)*
/// unary   := "!" unary
///          | "G[" int "," int "]" unary
///          | "F[" int "," int "]" unary
///          | "(" formula ")"
///          | "TRUE"
///          | identifier
/// ```
///
/// Identifiers match `[a-zA-Z_][a-zA-Z0-9_]*`. Runs of `&` (or `|`) parse to a
/// single n-ary node; parenthesized groups are kept as distinct nodes. Window
/// bounds must be non-negative integers with `lo <= hi`.
pub fn parse_formula(input: &str) -> Result<StlFormula, ParseError> {
    let mut parser = Parser { input, pos: 0 };
    let formula = parser.parse_or()?;
    parser.skip_whitespace();
    if parser.pos < parser.input.len() {
        return Err(parser.error(format!(
            "unexpected trailing input starting at {:?}",
            parser.remaining().chars().take(10).collect::<String>()
        )));
    }
    Ok(formula)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: String) -> ParseError {
        ParseError {
            message,
            offset: self.pos,
        }
    }

    fn remaining(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.remaining().chars().next()
    }

    fn advance(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_whitespace(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.advance();
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, expected: char) -> Result<(), ParseError> {
        self.skip_whitespace();
        match self.peek() {
            Some(c) if c == expected => {
                self.advance();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {expected:?}, found {c:?}"))),
            None => Err(self.error(format!("expected {expected:?}, found end of input"))),
        }
    }

    fn parse_or(&mut self) -> Result<StlFormula, ParseError> {
        let first = self.parse_and()?;
        let mut children = vec![first];
        loop {
            self.skip_whitespace();
            if self.peek() == Some('|') {
                self.advance();
                children.push(self.parse_and()?);
            } else {
                break;
            }
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            StlFormula::Or(children)
        })
    }

    fn parse_and(&mut self) -> Result<StlFormula, ParseError> {
        let first = self.parse_unary()?;
        let mut children = vec![first];
        loop {
            self.skip_whitespace();
            if self.peek() == Some('&') {
                self.advance();
                children.push(self.parse_unary()?);
            } else {
                break;
            }
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            StlFormula::And(children)
        })
    }

    fn parse_unary(&mut self) -> Result<StlFormula, ParseError> {
        self.skip_whitespace();
        match self.peek() {
            Some('!') => {
                self.advance();
                let child = self.parse_unary()?;
                Ok(StlFormula::Not(Box::new(child)))
            }
            Some('(') => {
                self.advance();
                let inner = self.parse_or()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                let ident = self.parse_identifier();
                if ident == "TRUE" {
                    return Ok(StlFormula::True);
                }
                if ident == "G" || ident == "F" {
                    let save = self.pos;
                    self.skip_whitespace();
                    if self.peek() == Some('[') {
                        let (lo, hi) = self.parse_window()?;
                        let child = self.parse_unary()?;
                        return Ok(if ident == "G" {
                            StlFormula::Always {
                                lo,
                                hi,
                                child: Box::new(child),
                            }
                        } else {
                            StlFormula::Eventually {
                                lo,
                                hi,
                                child: Box::new(child),
                            }
                        });
                    }
                    self.pos = save;
                }
                let _ = start;
                Ok(StlFormula::Predicate(ident))
            }
            Some(c) => Err(self.error(format!("expected a formula, found {c:?}"))),
            None => Err(self.error("expected a formula, found end of input".to_string())),
        }
    }

    fn parse_identifier(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.advance();
            } else {
                break;
            }
        }
        self.input[start..self.pos].to_string()
    }

    /// Parses `[lo,hi]`, validating `lo <= hi`.
    fn parse_window(&mut self) -> Result<(usize, usize), ParseError> {
        let window_start = self.pos;
        self.expect('[')?;
        let lo = self.parse_integer()?;
        self.expect(',')?;
        let hi = self.parse_integer()?;
        self.expect(']')?;
        if lo > hi {
            return Err(ParseError {
                message: format!("window bounds must satisfy lo <= hi, got [{lo},{hi}]"),
                offset: window_start,
            });
        }
        Ok((lo, hi))
    }

    fn parse_integer(&mut self) -> Result<usize, ParseError> {
        self.skip_whitespace();
        if self.peek() == Some('-') {
            return Err(self.error("window bounds must be non-negative".to_string()));
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.advance();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a non-negative integer".to_string()));
        }
        self.input[start..self.pos].parse::<usize>().map_err(|e| ParseError {
            message: format!("invalid integer: {e}"),
            offset: start,
        })
    }
}
