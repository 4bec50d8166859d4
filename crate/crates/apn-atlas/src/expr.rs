//! Inline expression syntax for functions over GF(2^n).
//!
//! Accepts sums of monomials in the primitive element `a` and the variable
//! `x`, optionally wrapped in subfield traces: `x^3 + a^-1*tr(1; a^3*x^9)`.
//! Multiplication signs are optional (`a^7x^48` works), exponents may be
//! negative, and `tr(m; ...)` is the trace onto GF(2^m). Trace-free
//! expressions keep their expanded polynomial attached to the resulting
//! function so later stages can reason about the form, not just the table.

use crate::field::{Elt, FieldSpec};
use crate::vbf::{UnivariatePoly, Vbf};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("expression: {0}")]
pub struct ExprError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Plus,
    Star,
    Caret,
    Open,
    Close,
    Semi,
    Int(i64),
    A,
    X,
    Tr,
}

fn lex(src: &str) -> Result<Vec<Tok>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            ';' => {
                out.push(Tok::Semi);
                i += 1;
            }
            '-' | '0'..='9' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<i64>() {
                    Ok(v) => out.push(Tok::Int(v)),
                    Err(_) => return err(format!("bad integer {text:?}")),
                }
            }
            'a' => {
                out.push(Tok::A);
                i += 1;
            }
            'x' => {
                out.push(Tok::X);
                i += 1;
            }
            't' => {
                // Only the keyword `tr(` starts with t; letters are
                // otherwise single-character tokens so `ax^3` lexes as a
                // product.
                let mut j = i + 1;
                if j < chars.len() && chars[j] == 'r' {
                    j += 1;
                    while j < chars.len() && chars[j].is_whitespace() {
                        j += 1;
                    }
                    if j < chars.len() && chars[j] == '(' {
                        out.push(Tok::Tr);
                        i += 2;
                        continue;
                    }
                }
                return err("`t` outside a tr(...) call");
            }
            other => return err(format!("unexpected character {other:?}")),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Ast {
    Num(u64),
    /// a^j with the exponent as written (may be negative).
    A(i64),
    /// x^e with the exponent as written (may be negative).
    X(i64),
    Sum(Vec<Ast>),
    Prod(Vec<Ast>),
    Tr(u32, Box<Ast>),
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => err(format!("expected {want:?}, found {t:?}")),
            None => err(format!("expected {want:?}, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Plus) {
            self.next();
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Ast::Sum(terms) })
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    factors.push(self.factor()?);
                }
                // Juxtaposition: a factor can follow directly.
                Some(Tok::A) | Some(Tok::X) | Some(Tok::Tr) | Some(Tok::Open)
                | Some(Tok::Int(_)) => {
                    factors.push(self.factor()?);
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Ast::Prod(factors) })
    }

    fn exponent(&mut self) -> Result<i64, ExprError> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(v),
            Some(t) => err(format!("expected exponent, found {t:?}")),
            None => err("expected exponent, found end of input"),
        }
    }

    fn factor(&mut self) -> Result<Ast, ExprError> {
        match self.next() {
            Some(Tok::A) => {
                if self.peek() == Some(&Tok::Caret) {
                    self.next();
                    Ok(Ast::A(self.exponent()?))
                } else {
                    Ok(Ast::A(1))
                }
            }
            Some(Tok::X) => {
                if self.peek() == Some(&Tok::Caret) {
                    self.next();
                    Ok(Ast::X(self.exponent()?))
                } else {
                    Ok(Ast::X(1))
                }
            }
            Some(Tok::Int(v)) => {
                if v < 0 {
                    err(format!("negative literal {v} outside an exponent"))
                } else {
                    Ok(Ast::Num(v as u64))
                }
            }
            Some(Tok::Tr) => {
                self.expect(Tok::Open)?;
                let m = match self.next() {
                    Some(Tok::Int(v)) if v > 0 => v as u32,
                    other => return err(format!("tr needs a positive subfield degree, found {other:?}")),
                };
                self.expect(Tok::Semi)?;
                let inner = self.expr()?;
                self.expect(Tok::Close)?;
                Ok(Ast::Tr(m, Box::new(inner)))
            }
            Some(Tok::Open) => {
                let inner = self.expr()?;
                self.expect(Tok::Close)?;
                Ok(inner)
            }
            Some(t) => err(format!("unexpected {t:?}")),
            None => err("unexpected end of input"),
        }
    }
}

/// Fold a written exponent into [0, 2^n - 1] as a function on the field:
/// positive multiples of 2^n - 1 become 2^n - 1 itself (the 0/1 indicator),
/// and negative exponents wrap through the multiplicative order.
fn fold_written(e: i64, ord: u64) -> u32 {
    if e == 0 {
        return 0;
    }
    let r = e.rem_euclid(ord as i64) as u64;
    (if r == 0 { ord } else { r }) as u32
}

impl Ast {
    fn validate(&self, spec: &FieldSpec) -> Result<(), ExprError> {
        match self {
            Ast::Num(_) | Ast::A(_) | Ast::X(_) => Ok(()),
            Ast::Sum(v) | Ast::Prod(v) => v.iter().try_for_each(|a| a.validate(spec)),
            Ast::Tr(m, inner) => {
                if *m == 0 || spec.n() % m != 0 {
                    return err(format!("tr({m}; ...) needs {m} | {}", spec.n()));
                }
                inner.validate(spec)
            }
        }
    }

    fn eval(&self, spec: &FieldSpec, x: Elt) -> Elt {
        let ord = spec.order();
        match self {
            Ast::Num(v) => (v & 1) as Elt,
            Ast::A(j) => spec.alog(j.rem_euclid(ord as i64) as u64),
            Ast::X(e) => spec.pow_u(x, fold_written(*e, ord) as u64),
            Ast::Sum(v) => v.iter().fold(0, |acc, a| acc ^ a.eval(spec, x)),
            Ast::Prod(v) => v.iter().fold(1, |acc, a| spec.mul(acc, a.eval(spec, x))),
            Ast::Tr(m, inner) => {
                spec.trace(*m, inner.eval(spec, x)).expect("validated subfield degree")
            }
        }
    }

    /// Expand into monomial terms when trace-free. Exponent sums reduce with
    /// the same indicator convention as evaluation, so expansion and
    /// pointwise evaluation agree on the whole field.
    fn to_terms(&self, spec: &FieldSpec) -> Option<Vec<(Elt, u32)>> {
        let ord = spec.order();
        match self {
            Ast::Num(v) => Ok::<_, ()>(if v & 1 == 1 { vec![(1, 0)] } else { vec![] }).ok(),
            Ast::A(j) => Some(vec![(spec.alog(j.rem_euclid(ord as i64) as u64), 0)]),
            Ast::X(e) => Some(vec![(1, fold_written(*e, ord))]),
            Ast::Sum(v) => {
                let mut out = Vec::new();
                for a in v {
                    out.extend(a.to_terms(spec)?);
                }
                Some(out)
            }
            Ast::Prod(v) => {
                let mut acc: Vec<(Elt, u32)> = vec![(1, 0)];
                for a in v {
                    let rhs = a.to_terms(spec)?;
                    let mut next = Vec::with_capacity(acc.len() * rhs.len());
                    for &(c1, e1) in &acc {
                        for &(c2, e2) in &rhs {
                            let c = spec.mul(c1, c2);
                            if c == 0 {
                                continue;
                            }
                            let e = if e1 as u64 + e2 as u64 == 0 {
                                0
                            } else {
                                let r = (e1 as u64 + e2 as u64) % ord;
                                (if r == 0 { ord } else { r }) as u32
                            };
                            next.push((c, e));
                        }
                    }
                    acc = next;
                }
                Some(acc)
            }
            Ast::Tr(..) => None,
        }
    }
}

/// Parse an expression into a function over the given field. Trace-free
/// expressions carry their reduced polynomial as provenance.
pub fn parse_function(spec: &FieldSpec, src: &str) -> Result<Vbf, ExprError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return err("empty expression");
    }
    let mut p = Parser { toks: &toks, pos: 0 };
    let ast = p.expr()?;
    if p.pos != toks.len() {
        return err(format!("trailing input at token {:?}", toks[p.pos]));
    }
    ast.validate(spec)?;
    let lut: Vec<Elt> = (0..spec.size()).map(|x| ast.eval(spec, x as Elt)).collect();
    let f = Vbf::from_lut(spec, lut).map_err(|e| ExprError(e.to_string()))?;
    Ok(match ast.to_terms(spec) {
        Some(terms) => {
            let poly = UnivariatePoly::new(&terms);
            debug_assert!(
                (0..spec.size()).all(|x| poly.eval(spec, x as Elt) == f.lut()[x]),
                "expansion must agree with evaluation"
            );
            f.with_provenance(poly)
        }
        None => f,
    })
}
