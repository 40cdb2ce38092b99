//! Text syntax for polynomials.
//!
//! ```text
//! poly   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor+                      juxtaposition is multiplication
//! factor := atom ['^' digits]
//! atom   := number | var | gen ['*'] | '(' poly ')'
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['i']
//! var    := 't' digits                   1-based: t1, t2, ...
//! gen    := identifier that is not a var; postfix '*' is the adjoint
//! ```
//!
//! Example: `b0 t1 b1 t2 b2 t1 b3 t4 b4 + 0.5 (t1 t2 + t2 t1) - 2i t3^2`.
//! Error positions are 0-based byte offsets.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::poly::{CoefficientAlgebra, Gen, NcPoly};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Var(usize),
    Ident(String),
    Star,
    Plus,
    Minus,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'*' => out.push((start, Tok::Star)),
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'^' => out.push((start, Tok::Caret)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'0'..=b'9' | b'.' => {
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        while j < b.len() && b[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let v: f64 = s[start..i].parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("bad number '{}'", &s[start..i]),
                })?;
                let imag = i < b.len() && b[i] == b'i' && !(i + 1 < b.len() && is_ident_char(b[i + 1]));
                if imag {
                    i += 1;
                }
                out.push((start, Tok::Num(v, imag)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && is_ident_char(b[i]) {
                    i += 1;
                }
                let word = &s[start..i];
                let tail = &word[1..];
                if word.starts_with('t') && !tail.is_empty() && tail.bytes().all(|d| d.is_ascii_digit()) {
                    let idx: usize = tail.parse().map_err(|_| Error::Parse {
                        pos: start,
                        msg: "variable index too large".into(),
                    })?;
                    if idx == 0 {
                        return Err(Error::Parse {
                            pos: start,
                            msg: "variables are numbered from t1".into(),
                        });
                    }
                    out.push((start, Tok::Var(idx - 1)));
                } else {
                    out.push((start, Tok::Ident(word.to_string())));
                }
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character '{}'", s[start..].chars().next().unwrap()),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

struct Parser<'a, T> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    n: usize,
    alg: Arc<CoefficientAlgebra<T>>,
}

impl<T: Real> Parser<'_, T> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<V>(&self, msg: impl Into<String>) -> Result<V> {
        Err(Error::Parse {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn poly(&mut self) -> Result<NcPoly<T>> {
        let mut acc = NcPoly::zero(self.n, self.alg.clone());
        let mut sign = T::one();
        match self.peek() {
            Some(Tok::Plus) => self.pos += 1,
            Some(Tok::Minus) => {
                sign = -T::one();
                self.pos += 1;
            }
            _ => {}
        }
        loop {
            let t = self.term()?;
            acc = acc.add(&t.scale_real(sign))?;
            match self.peek() {
                Some(Tok::Plus) => sign = T::one(),
                Some(Tok::Minus) => sign = -T::one(),
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Num(..)) | Some(Tok::Var(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen)
        )
    }

    fn term(&mut self) -> Result<NcPoly<T>> {
        if !self.starts_factor() {
            return self.err("expected a term");
        }
        let mut acc = NcPoly::one(self.n, self.alg.clone());
        while self.starts_factor() {
            let f = self.factor()?;
            acc = acc.multiply(&f)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NcPoly<T>> {
        let a = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.peek() {
                Some(Tok::Num(v, false)) if v.fract() == 0.0 && *v >= 0.0 && *v <= 64.0 => {
                    let e = *v as usize;
                    self.pos += 1;
                    return a.pow(e);
                }
                _ => return self.err("exponent must be an integer between 0 and 64"),
            }
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<NcPoly<T>> {
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Num(v, imag)) => {
                self.pos += 1;
                let v = T::lit(v);
                let c = if imag {
                    Complex::new(T::zero(), v)
                } else {
                    Complex::new(v, T::zero())
                };
                Ok(NcPoly::constant(self.n, self.alg.clone(), c))
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(NcPoly::var(self.n, self.alg.clone(), i))
            }
            Some(Tok::Ident(name)) => {
                let Some(id) = self.alg.id_of(&name) else {
                    return self.err(format!("unknown coefficient '{name}'"));
                };
                self.pos += 1;
                let star = self.peek() == Some(&Tok::Star);
                if star {
                    self.pos += 1;
                }
                Ok(NcPoly::coef(self.n, self.alg.clone(), Gen { id, star }))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let p = self.poly()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(p)
            }
            _ => self.err("expected a factor"),
        }
    }
}

/// Parses with a given arity and coefficient algebra.
pub fn parse_poly_in<T: Real>(text: &str, n: usize, alg: Arc<CoefficientAlgebra<T>>) -> Result<NcPoly<T>> {
    let toks = lex(text)?;
    for (p, t) in &toks {
        if let Tok::Var(i) = t {
            if *i >= n {
                return Err(Error::Parse {
                    pos: *p,
                    msg: format!("variable t{} exceeds arity {n}", i + 1),
                });
            }
        }
    }
    let mut parser = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        n,
        alg,
    };
    let p = parser.poly()?;
    if parser.pos != toks.len() {
        return parser.err("unexpected trailing input");
    }
    Ok(p)
}

/// Parses a polynomial, inferring the arity (largest variable index) and a
/// symbolic algebra of non-self-adjoint generators in order of appearance.
pub fn parse_poly<T: Real>(text: &str) -> Result<NcPoly<T>> {
    let toks = lex(text)?;
    let mut n = 0;
    let mut names: Vec<String> = Vec::new();
    for (_, t) in &toks {
        match t {
            Tok::Var(i) => n = n.max(i + 1),
            Tok::Ident(s) if !names.contains(s) => names.push(s.clone()),
            _ => {}
        }
    }
    let flags = vec![false; names.len()];
    let alg = Arc::new(CoefficientAlgebra::symbolic(names, flags)?);
    parse_poly_in(text, n, alg)
}
