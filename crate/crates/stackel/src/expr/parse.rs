//! Recursive-descent parser for the expression surface syntax.
//!
//! Grammar (whitespace insignificant between tokens):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-" unary | atom
//! atom   := number | symbol | func "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative. Because the base of `^` is a `unary`, negation
//! binds tighter than exponentiation: `-2^2` parses as `(-2)^2 = 4`.
//! Multiplication is always explicit. The identifier `pi` folds to its
//! numeric value at parse time.

use std::fmt;

use super::{Expr, UnaryOp};

/// Parse failure, with the byte offset where it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// Unexpected token or end of input; `expected` lists the token classes
    /// that would have been accepted at `offset`.
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    /// An identifier applied like a function is not one of the known names.
    UnknownFunction { offset: usize, name: String },
    /// A numeric literal did not scan as a finite number.
    BadNumber { offset: usize, text: String },
    /// Expression nesting exceeded the recursion budget.
    TooDeep { offset: usize },
}

impl ParseError {
    /// Byte offset of the failure within the source string.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::BadNumber { offset, .. }
            | ParseError::TooDeep { offset } => *offset,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax {
                offset,
                expected,
                found,
            } => write!(
                f,
                "parse error at offset {}: found {}, expected {}",
                offset,
                found,
                expected.join(" | ")
            ),
            ParseError::UnknownFunction { offset, name } => {
                write!(f, "parse error at offset {}: unknown function '{}'", offset, name)
            }
            ParseError::BadNumber { offset, text } => {
                write!(f, "parse error at offset {}: bad numeric literal '{}'", offset, text)
            }
            ParseError::TooDeep { offset } => write!(
                f,
                "parse error at offset {}: nesting deeper than {} levels",
                offset, MAX_DEPTH
            ),
        }
    }
}

impl std::error::Error for ParseError {}

const FUNCTIONS: [(&str, UnaryOp); 9] = [
    ("sin", UnaryOp::Sin),
    ("cos", UnaryOp::Cos),
    ("tan", UnaryOp::Tan),
    ("sinh", UnaryOp::Sinh),
    ("cosh", UnaryOp::Cosh),
    ("exp", UnaryOp::Exp),
    ("log", UnaryOp::Log),
    ("sqrt", UnaryOp::Sqrt),
    ("atan", UnaryOp::Atan),
];

/// Recursion budget. Every nesting level passes through `unary`, so this
/// bounds parser stack depth regardless of how the input nests.
const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax(&["operator", "end of input"]));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn found_desc(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(b) => {
                let ch = self.src[self.pos..].chars().next().unwrap();
                let _ = b;
                format!("'{}'", ch)
            }
        }
    }

    fn syntax(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_vec(),
            found: self.found_desc(),
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = Expr::add(acc, rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = Expr::sub(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                acc = Expr::mul(acc, rhs);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                acc = Expr::div(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    // factor and unary each hold a depth unit across their recursive calls;
    // every nesting construct (parens, functions, '-' chains, '^' chains)
    // passes through at least one of them per level.
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(ParseError::TooDeep { offset: self.pos });
        }
        self.depth += 1;
        let result = self.factor_inner();
        self.depth -= 1;
        result
    }

    fn factor_inner(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(ParseError::TooDeep { offset: self.pos });
        }
        self.depth += 1;
        let result = if self.eat(b'-') {
            self.unary().map(Expr::neg)
        } else {
            self.atom()
        };
        self.depth -= 1;
        result
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax(&["')'", "operator"]));
                }
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.ident(),
            _ => Err(self.syntax(&["number", "symbol", "function", "'('", "'-'"])),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all; `e` starts an identifier.
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text.parse().map_err(|_| ParseError::BadNumber {
            offset: start,
            text: text.to_string(),
        })?;
        if !value.is_finite() {
            return Err(ParseError::BadNumber {
                offset: start,
                text: text.to_string(),
            });
        }
        self.skip_ws();
        Ok(Expr::num(value))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let op = FUNCTIONS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, op)| *op)
                .ok_or_else(|| ParseError::UnknownFunction {
                    offset: start,
                    name: name.to_string(),
                })?;
            self.pos += 1;
            self.skip_ws();
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax(&["')'", "operator"]));
            }
            return Ok(Expr::unary(op, arg));
        }
        if name == "pi" {
            return Ok(Expr::num(std::f64::consts::PI));
        }
        Ok(Expr::sym(name))
    }
}
