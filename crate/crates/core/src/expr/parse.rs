//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := unary (("*"|"/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?            (right-associative)
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Identifiers of the form `name_suffix` where every suffix character is one
//! of the coordinate letters `x t u v w` denote jet variables (`u_xx`,
//! `w_t`); the explicit form `Diff(u, x, 2)` is also accepted. Parsed
//! expressions are returned in canonical form.

use num::BigInt;

use super::{Expr, Func, JetVar, ParseError, ParseErrorKind, Q};

const JET_SUFFIX_LETTERS: &[u8] = b"xtuvw";

/// Parses `text` into a canonical expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.parse_expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err_here(ParseErrorKind::UnexpectedChar));
    }
    Ok(e.canon())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
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

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err_here(ParseErrorKind::Expected(c as char)))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    acc = Expr::Sum(vec![acc, rhs]);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    acc = Expr::Sum(vec![acc, Expr::Product(vec![Expr::int(-1), rhs])]);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    acc = Expr::Product(vec![acc, rhs]);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    let inv = Expr::Power(Box::new(rhs), Box::new(Expr::int(-1)));
                    acc = Expr::Product(vec![acc, inv]);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Expr::Product(vec![Expr::int(-1), inner]));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let expo = self.parse_unary()?;
            return Ok(Expr::Power(Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident_expr(),
            Some(_) => Err(self.err_here(ParseErrorKind::UnexpectedChar)),
            None => Err(self.err_here(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: BigInt = text
            .parse()
            .map_err(|_| ParseError { offset: start, kind: ParseErrorKind::BadNumber })?;
        Ok(Expr::Rational(Q::from_integer(n)))
    }

    fn parse_ident_expr(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii ident")
            .to_string();

        if self.peek() == Some(b'(') {
            if name == "Diff" {
                return self.parse_diff(start);
            }
            let func = Func::from_name(&name).ok_or(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownFunction(name.clone()),
            })?;
            self.expect(b'(')?;
            let arg = self.parse_expr()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }

        Ok(classify_ident(&name))
    }

    fn parse_diff(&mut self, start: usize) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        let mut args = vec![self.parse_expr()?];
        while self.eat(b',') {
            args.push(self.parse_expr()?);
        }
        self.expect(b')')?;

        let bad = ParseError { offset: start, kind: ParseErrorKind::BadDiff };
        if args.len() < 2 {
            return Err(bad);
        }
        let dep = match &args[0] {
            Expr::Symbol(s) => s.clone(),
            _ => return Err(bad),
        };
        let mut index: Vec<String> = Vec::new();
        let mut i = 1;
        while i < args.len() {
            let var = match &args[i] {
                Expr::Symbol(s) => s.clone(),
                _ => return Err(bad),
            };
            let count = if i + 1 < args.len() {
                match &args[i + 1] {
                    Expr::Rational(r) if r.is_integer() && *r > Q::from_integer(0.into()) => {
                        i += 1;
                        r.to_integer()
                            .try_into()
                            .map_err(|_| bad.clone())?
                    }
                    Expr::Symbol(_) => 1usize,
                    _ => return Err(bad),
                }
            } else {
                1usize
            };
            for _ in 0..count {
                index.push(var.clone());
            }
            i += 1;
        }
        if index.is_empty() {
            return Err(bad);
        }
        index.sort();
        Ok(Expr::Jet(JetVar { dep, index }))
    }
}

/// Splits jet shorthand from plain identifiers.
fn classify_ident(name: &str) -> Expr {
    if let Some(pos) = name.rfind('_') {
        let (dep, suffix) = (&name[..pos], &name[pos + 1..]);
        if !dep.is_empty()
            && !dep.contains('_')
            && !suffix.is_empty()
            && suffix.bytes().all(|c| JET_SUFFIX_LETTERS.contains(&c))
        {
            let mut index: Vec<String> =
                suffix.chars().map(|c| c.to_string()).collect();
            index.sort();
            return Expr::Jet(JetVar { dep: dep.to_string(), index });
        }
    }
    Expr::Symbol(name.to_string())
}
