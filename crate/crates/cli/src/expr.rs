//! Polynomial expressions in `z` (filtered) or `Z` (q-analog).
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := ('+' | '-') unary | power
//! power   := atom ('^' exponent)?
//! exponent:= '-'? integer
//! atom    := number 'i'? | 'i' | variable | '(' expr ')'
//! ```
//!
//! Negative exponents are accepted only for `Z`, and only on a single term.

use std::collections::BTreeMap;
use std::fmt;

use gwa_core::poly::{Laurent, Poly};
use gwa_core::C64;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// `z`, nonnegative powers only.
    Filtered,
    /// `Z`, any integer power.
    Q,
}

impl VarKind {
    fn symbol(self) -> char {
        match self {
            VarKind::Filtered => 'z',
            VarKind::Q => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseError {
    /// Byte offset of the offending token.
    pub position: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: found {}, expected one of {}", self.position, self.found, self.expected.join(", "))
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Imag,
    Var(char),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(x) => format!("number {x}"),
            Token::Imag => "'i'".into(),
            Token::Var(c) => format!("'{c}'"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Caret => "'^'".into(),
            Token::Open => "'('".into(),
            Token::Close => "')'".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match ch {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '^' => Some(Token::Caret),
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            'i' => Some(Token::Imag),
            'z' | 'Z' => Some(Token::Var(ch)),
            _ => None,
        };
        if let Some(t) = single {
            out.push((i, t));
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part: e[+-]digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    i = k;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ParseError {
                position: start,
                found: format!("malformed number {text:?}"),
                expected: vec!["number".into()],
            })?;
            out.push((start, Token::Number(value)));
            continue;
        }
        let c = src[i..].chars().next().unwrap_or(ch);
        return Err(ParseError {
            position: i,
            found: format!("character {c:?}"),
            expected: vec!["number".into(), "'i'".into(), "'z'".into(), "'Z'".into(), "operator".into(), "parenthesis".into()],
        });
    }
    out.push((src.len(), Token::End));
    Ok(out)
}

/// Sparse Laurent polynomial: exponent to coefficient.
type Terms = BTreeMap<i64, C64>;

fn add(a: &Terms, b: &Terms, sign: f64) -> Terms {
    let mut out = a.clone();
    for (&k, &v) in b {
        *out.entry(k).or_default() += v * sign;
    }
    out
}

fn mul(a: &Terms, b: &Terms) -> Terms {
    let mut out = Terms::new();
    for (&i, &x) in a {
        for (&j, &y) in b {
            *out.entry(i + j).or_default() += x * y;
        }
    }
    out
}

fn constant(c: C64) -> Terms {
    Terms::from([(0, c)])
}

/// Largest degree a power may produce, to keep expansions bounded.
const MAX_EXPONENT: i64 = 512;

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
    var: VarKind,
    depth: usize,
}

/// Nesting limit for parentheses and prefix signs.
const MAX_DEPTH: usize = 200;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].1
    }

    fn position(&self) -> usize {
        self.tokens[self.at].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].1.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn fail(&self, expected: &[&str]) -> ParseError {
        ParseError {
            position: self.position(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Terms, ParseError> {
        let mut acc = self.term()?;
        loop {
            let sign = match self.peek() {
                Token::Plus => 1.0,
                Token::Minus => -1.0,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.term()?;
            acc = add(&acc, &rhs, sign);
        }
    }

    fn term(&mut self) -> Result<Terms, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Token::Star {
            self.bump();
            let rhs = self.unary()?;
            acc = mul(&acc, &rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Terms, ParseError> {
        self.depth += 1;
        let out = self.unary_inner();
        self.depth -= 1;
        out
    }

    fn unary_inner(&mut self) -> Result<Terms, ParseError> {
        if self.depth > MAX_DEPTH {
            return Err(ParseError { position: self.position(), found: self.peek().describe(), expected: vec![format!("nesting depth at most {MAX_DEPTH}")] });
        }
        match self.peek() {
            Token::Plus => {
                self.bump();
                self.unary()
            }
            Token::Minus => {
                self.bump();
                Ok(self.unary()?.into_iter().map(|(k, v)| (k, -v)).collect())
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Terms, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let sign_at = self.position();
        let negative = if *self.peek() == Token::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.position();
        let k = match self.peek() {
            Token::Number(x) if x.fract() == 0.0 && *x <= MAX_EXPONENT as f64 => *x as i64,
            _ => return Err(self.fail(&["integer exponent"])),
        };
        self.bump();
        let span = match (base.keys().next(), base.keys().next_back()) {
            (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
            _ => 0,
        };
        if span.saturating_mul(k) > MAX_EXPONENT {
            return Err(ParseError { position: at, found: format!("exponent {k}"), expected: vec![format!("total degree at most {MAX_EXPONENT}")] });
        }
        if !negative {
            let mut out = constant(C64::new(1.0, 0.0));
            for _ in 0..k {
                out = mul(&out, &base);
            }
            return Ok(out);
        }
        if self.var == VarKind::Filtered {
            return Err(ParseError {
                position: sign_at,
                found: "'-'".into(),
                expected: vec!["nonnegative integer exponent".into()],
            });
        }
        // only a single term can be inverted
        let live: Vec<_> = base.iter().filter(|(_, v)| **v != C64::new(0.0, 0.0)).collect();
        match live.as_slice() {
            [(&e, &c)] => {
                let inv = C64::new(1.0, 0.0) / c;
                Ok(Terms::from([(-e * k, inv.powi(k as i32))]))
            }
            _ => Err(ParseError { position: at, found: "negative power of a sum".into(), expected: vec!["nonnegative integer exponent".into()] }),
        }
    }

    fn atom(&mut self) -> Result<Terms, ParseError> {
        let expected = ["number", "'i'", &format!("'{}'", self.var.symbol()), "'('"].map(String::from);
        let expected: Vec<&str> = expected.iter().map(|s| s.as_str()).collect();
        match self.peek().clone() {
            Token::Number(x) => {
                self.bump();
                if *self.peek() == Token::Imag {
                    self.bump();
                    Ok(constant(C64::new(0.0, x)))
                } else {
                    Ok(constant(C64::new(x, 0.0)))
                }
            }
            Token::Imag => {
                self.bump();
                Ok(constant(C64::new(0.0, 1.0)))
            }
            Token::Var(c) if c == self.var.symbol() => {
                self.bump();
                Ok(Terms::from([(1, C64::new(1.0, 0.0))]))
            }
            Token::Open => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Token::Close {
                    return Err(self.fail(&["')'", "'+'", "'-'", "'*'", "'^'"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.fail(&expected)),
        }
    }
}

fn parse_terms(src: &str, var: VarKind) -> Result<Terms, ParseError> {
    let mut p = Parser { tokens: lex(src)?, at: 0, var, depth: 0 };
    let out = p.expr()?;
    if *p.peek() != Token::End {
        return Err(p.fail(&["'+'", "'-'", "'*'", "'^'", "end of input"]));
    }
    Ok(out)
}

/// Parses a polynomial in `z`.
pub fn parse_poly(src: &str) -> Result<Poly<f64>, ParseError> {
    let terms = parse_terms(src, VarKind::Filtered)?;
    let top = terms.keys().next_back().copied().unwrap_or(0).max(0) as usize;
    let mut coeffs = vec![C64::new(0.0, 0.0); top + 1];
    for (k, v) in terms {
        coeffs[k as usize] += v;
    }
    Ok(Poly::from_coeffs(coeffs))
}

/// Parses a Laurent polynomial in `Z`.
pub fn parse_laurent(src: &str) -> Result<Laurent<f64>, ParseError> {
    let terms = parse_terms(src, VarKind::Q)?;
    let doubled: Vec<(i64, C64)> = terms.into_iter().map(|(k, v)| (2 * k, v)).collect();
    Ok(Laurent::from_terms2(&doubled))
}
