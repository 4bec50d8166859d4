//! Vectorial Boolean functions F: GF(2^n) -> GF(2^n).
//!
//! The working representation is a full lookup table; a univariate
//! polynomial, when the function was built from one, rides along as
//! provenance. Algebraic normal form, algebraic degree and extended-affine
//! transformations operate on the table.

use crate::field::{Elt, FieldSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VbfError {
    #[error("exponent {0} exceeds 2^n - 1")]
    ExponentOutOfRange(u32),
    #[error("map is singular")]
    SingularMap,
    #[error("operands live in different fields")]
    SpecMismatch,
    #[error("lookup table must have 2^n entries, all below 2^n")]
    MalformedLut,
    #[error("malformed record: {0}")]
    MalformedRecord(String),
}

/// A univariate polynomial over GF(2^n) in sparse form. Terms are kept with
/// nonzero coefficients and strictly increasing exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnivariatePoly {
    terms: Vec<(Elt, u32)>,
}

impl UnivariatePoly {
    /// Normalising constructor: merges duplicate exponents (coefficients
    /// add), drops zero terms, sorts by exponent.
    pub fn new(terms: &[(Elt, u32)]) -> UnivariatePoly {
        let mut v: Vec<(Elt, u32)> = terms.to_vec();
        v.sort_by_key(|t| t.1);
        let mut merged: Vec<(Elt, u32)> = Vec::with_capacity(v.len());
        for (c, e) in v {
            match merged.last_mut() {
                Some(last) if last.1 == e => last.0 ^= c,
                _ => merged.push((c, e)),
            }
        }
        merged.retain(|t| t.0 != 0);
        UnivariatePoly { terms: merged }
    }

    pub fn monomial(c: Elt, e: u32) -> UnivariatePoly {
        UnivariatePoly::new(&[(c, e)])
    }

    pub fn terms(&self) -> &[(Elt, u32)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single exponent of a one-term polynomial with coefficient 1,
    /// if that is what this is.
    pub fn as_plain_power(&self) -> Option<u32> {
        match self.terms.as_slice() {
            [(1, e)] => Some(*e),
            _ => None,
        }
    }

    pub fn eval(&self, spec: &FieldSpec, x: Elt) -> Elt {
        let mut acc = 0;
        for &(c, e) in &self.terms {
            acc ^= spec.mul(c, spec.pow_u(x, e as u64));
        }
        acc
    }

    /// Render with coefficients written as powers of the generator:
    /// `a^17*x^48 + x^3 + 1`. Terms appear highest exponent first.
    pub fn render(&self, spec: &FieldSpec) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for &(c, e) in self.terms.iter().rev() {
            let coeff = match spec.dlog(c).unwrap() {
                0 => String::new(),
                1 => "a".into(),
                j => format!("a^{j}"),
            };
            let var = match e {
                0 => String::new(),
                1 => "x".into(),
                _ => format!("x^{e}"),
            };
            parts.push(match (coeff.is_empty(), var.is_empty()) {
                (true, true) => "1".into(),
                (true, false) => var,
                (false, true) => coeff,
                (false, false) => format!("{coeff}*{var}"),
            });
        }
        parts.join(" + ")
    }
}

/// An n x n matrix over GF(2) acting on field elements as bit vectors;
/// `cols[i]` is the image of the i-th unit vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearMap {
    n: u32,
    cols: Vec<Elt>,
}

impl LinearMap {
    pub fn new(n: u32, cols: Vec<Elt>) -> LinearMap {
        assert_eq!(cols.len(), n as usize);
        LinearMap { n, cols }
    }

    pub fn identity(n: u32) -> LinearMap {
        LinearMap { n, cols: (0..n).map(|i| 1 << i).collect() }
    }

    pub fn zero(n: u32) -> LinearMap {
        LinearMap { n, cols: vec![0; n as usize] }
    }

    /// Multiplication by a fixed field element.
    pub fn mult_by(spec: &FieldSpec, c: Elt) -> LinearMap {
        LinearMap {
            n: spec.n(),
            cols: (0..spec.n()).map(|i| spec.mul(c, 1 << i)).collect(),
        }
    }

    /// The Frobenius power x -> x^(2^j).
    pub fn frobenius(spec: &FieldSpec, j: u32) -> LinearMap {
        LinearMap {
            n: spec.n(),
            cols: (0..spec.n()).map(|i| spec.pow_u(1 << i, 1u64 << (j % spec.n()))).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn cols(&self) -> &[Elt] {
        &self.cols
    }

    #[inline]
    pub fn apply(&self, x: Elt) -> Elt {
        let mut acc = 0;
        let mut bits = x;
        while bits != 0 {
            acc ^= self.cols[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        acc
    }

    /// self o other.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        LinearMap {
            n: self.n,
            cols: other.cols.iter().map(|&c| self.apply(c)).collect(),
        }
    }

    pub fn rank(&self) -> u32 {
        let mut rows: Vec<Elt> = self.cols.clone();
        let mut rank = 0;
        for bit in 0..self.n {
            let pos = (rank as usize..rows.len()).find(|&i| rows[i] >> bit & 1 == 1);
            if let Some(p) = pos {
                rows.swap(rank as usize, p);
                let piv = rows[rank as usize];
                for (i, r) in rows.iter_mut().enumerate() {
                    if i != rank as usize && *r >> bit & 1 == 1 {
                        *r ^= piv;
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.n
    }

    pub fn inverse(&self) -> Result<LinearMap, VbfError> {
        let n = self.n as usize;
        // Gauss-Jordan on [M | I] with columns as the working rows.
        let mut m: Vec<u32> = self
            .cols
            .iter()
            .enumerate()
            .map(|(i, &c)| (c as u32) | (1u32 << (self.n + i as u32)))
            .collect();
        let mut row = 0;
        for bit in 0..self.n {
            let pos = (row..n).find(|&i| m[i] >> bit & 1 == 1).ok_or(VbfError::SingularMap)?;
            m.swap(row, pos);
            let piv = m[row];
            for (i, r) in m.iter_mut().enumerate() {
                if i != row && *r >> bit & 1 == 1 {
                    *r ^= piv;
                }
            }
            row += 1;
        }
        // row i of the reduced block holds the preimage of e_i
        let cols = (0..n).map(|i| (m[i] >> self.n) as Elt).collect();
        Ok(LinearMap { n: self.n, cols })
    }

    /// The transpose of the bit matrix.
    pub fn transpose(&self) -> LinearMap {
        let cols = (0..self.n)
            .map(|j| {
                let mut c = 0;
                for (i, &col) in self.cols.iter().enumerate() {
                    c |= (col >> j & 1) << i;
                }
                c
            })
            .collect();
        LinearMap { n: self.n, cols }
    }
}

/// x -> L(x) + c.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: LinearMap,
    pub c: Elt,
}

impl AffineMap {
    pub fn new(linear: LinearMap, c: Elt) -> AffineMap {
        AffineMap { linear, c }
    }

    pub fn identity(n: u32) -> AffineMap {
        AffineMap { linear: LinearMap::identity(n), c: 0 }
    }

    pub fn zero(n: u32) -> AffineMap {
        AffineMap { linear: LinearMap::zero(n), c: 0 }
    }

    pub fn constant(n: u32, c: Elt) -> AffineMap {
        AffineMap { linear: LinearMap::zero(n), c }
    }

    #[inline]
    pub fn apply(&self, x: Elt) -> Elt {
        self.linear.apply(x) ^ self.c
    }

    pub fn is_invertible(&self) -> bool {
        self.linear.is_invertible()
    }
}

/// The algebraic normal form of a vectorial function: coefficient words
/// a_u (as field-element bit patterns) with F(x) = sum over u subset x
/// of a_u.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnfForm {
    n: u32,
    coeffs: Vec<u16>,
}

/// In-place binary Moebius transform; involutive.
fn mobius(a: &mut [u16]) {
    let bits = a.len().trailing_zeros();
    for i in 0..bits {
        let bit = 1usize << i;
        for x in 0..a.len() {
            if x & bit != 0 {
                a[x] ^= a[x ^ bit];
            }
        }
    }
}

impl AnfForm {
    /// Wrap explicit monomial coefficients (index u = the monomial
    /// \prod_{i in u} x_i).
    pub fn new(n: u32, coeffs: Vec<u16>) -> AnfForm {
        assert_eq!(coeffs.len(), 1 << n);
        AnfForm { n, coeffs }
    }

    pub fn from_lut(n: u32, lut: &[u16]) -> AnfForm {
        let mut coeffs = lut.to_vec();
        mobius(&mut coeffs);
        AnfForm { n, coeffs }
    }

    pub fn to_lut(&self) -> Vec<u16> {
        let mut lut = self.coeffs.clone();
        mobius(&mut lut);
        lut
    }

    pub fn coeffs(&self) -> &[u16] {
        &self.coeffs
    }

    /// Largest Hamming weight of a monomial with nonzero coefficient;
    /// 0 for the zero function.
    pub fn degree(&self) -> u32 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(u, _)| u.count_ones())
            .max()
            .unwrap_or(0)
    }
}

/// A vectorial Boolean function over a fixed field, as a full lookup table.
#[derive(Debug, Clone)]
pub struct Vbf {
    spec: FieldSpec,
    lut: Vec<u16>,
    provenance: Option<UnivariatePoly>,
}

impl PartialEq for Vbf {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.lut == other.lut
    }
}
impl Eq for Vbf {}

impl Vbf {
    /// Evaluate a univariate polynomial into a table. Exponents above
    /// 2^n - 1 are rejected; 2^n - 1 itself is allowed.
    pub fn from_univariate(spec: &FieldSpec, poly: &UnivariatePoly) -> Result<Vbf, VbfError> {
        let max = spec.order() as u32;
        for &(_, e) in poly.terms() {
            if e > max {
                return Err(VbfError::ExponentOutOfRange(e));
            }
        }
        let lut = spec.elements().map(|x| poly.eval(spec, x)).collect();
        Ok(Vbf { spec: spec.clone(), lut, provenance: Some(poly.clone()) })
    }

    /// Wrap an explicit table; no univariate provenance.
    pub fn from_lut(spec: &FieldSpec, lut: Vec<u16>) -> Result<Vbf, VbfError> {
        if lut.len() != spec.size() || lut.iter().any(|&v| v as usize >= spec.size()) {
            return Err(VbfError::MalformedLut);
        }
        Ok(Vbf { spec: spec.clone(), lut, provenance: None })
    }

    /// Build a table by evaluating a closure on every field element.
    pub fn from_fn(spec: &FieldSpec, f: impl Fn(Elt) -> Elt) -> Vbf {
        let lut = spec.elements().map(f).collect();
        Vbf { spec: spec.clone(), lut, provenance: None }
    }

    pub fn power(spec: &FieldSpec, d: u32) -> Result<Vbf, VbfError> {
        Vbf::from_univariate(spec, &UnivariatePoly::monomial(1, d))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn n(&self) -> u32 {
        self.spec.n()
    }

    pub fn lut(&self) -> &[u16] {
        &self.lut
    }

    #[inline]
    pub fn apply(&self, x: Elt) -> Elt {
        self.lut[x as usize]
    }

    pub fn provenance(&self) -> Option<&UnivariatePoly> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, poly: UnivariatePoly) -> Vbf {
        self.provenance = Some(poly);
        self
    }

    pub fn anf(&self) -> AnfForm {
        AnfForm::from_lut(self.spec.n(), &self.lut)
    }

    pub fn algebraic_degree(&self) -> u32 {
        self.anf().degree()
    }

    pub fn is_quadratic(&self) -> bool {
        self.algebraic_degree() == 2
    }

    /// Pointwise sum (XOR of tables). Both operands must share the field.
    pub fn add(&self, other: &Vbf) -> Result<Vbf, VbfError> {
        if self.spec != other.spec {
            return Err(VbfError::SpecMismatch);
        }
        let lut = self.lut.iter().zip(&other.lut).map(|(&a, &b)| a ^ b).collect();
        Ok(Vbf { spec: self.spec.clone(), lut, provenance: None })
    }

    /// The extended-affine transform L1 o F o L2 + A. L1 and L2 must be
    /// affine permutations; A is any affine map.
    pub fn apply_ea(&self, l1: &AffineMap, l2: &AffineMap, a: &AffineMap) -> Result<Vbf, VbfError> {
        if !l1.is_invertible() || !l2.is_invertible() {
            return Err(VbfError::SingularMap);
        }
        let lut = self
            .spec
            .elements()
            .map(|x| l1.apply(self.lut[l2.apply(x) as usize]) ^ a.apply(x))
            .collect();
        Ok(Vbf { spec: self.spec.clone(), lut, provenance: None })
    }

    /// Unique univariate polynomial of degree < 2^n representing this
    /// function, by direct interpolation over the multiplicative group.
    pub fn interpolate(&self) -> UnivariatePoly {
        let spec = &self.spec;
        let order = spec.order();
        let mut terms: Vec<(Elt, u32)> = Vec::new();
        if self.lut[0] != 0 {
            terms.push((self.lut[0], 0));
        }
        // c_j = sum over nonzero a of F(a) a^(-j), for 1 <= j <= 2^n - 2
        for j in 1..order {
            let mut c = 0;
            for a in 1..spec.size() as Elt {
                let i = spec.dlog(a).unwrap();
                let apj = spec.alog((order - j % order) * i % order);
                c ^= spec.mul(self.lut[a as usize], apj);
            }
            if c != 0 {
                terms.push((c, j as u32));
            }
        }
        let mut c_top = 0;
        for &v in &self.lut {
            c_top ^= v;
        }
        if c_top != 0 {
            terms.push((c_top, order as u32));
        }
        UnivariatePoly::new(&terms)
    }

    /// Content digest over (n, modulus, table); stable across runs.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.spec.n().to_le_bytes());
        h.update(self.spec.modulus().to_le_bytes());
        for &v in &self.lut {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn to_record(&self) -> VbfRecord {
        let w = entry_width(self.spec.n());
        let mut lut_hex = String::with_capacity(self.lut.len() * w);
        for &v in &self.lut {
            lut_hex.push_str(&format!("{v:0w$x}"));
        }
        VbfRecord {
            n: self.spec.n(),
            modulus: format!("0x{:x}", self.spec.modulus()),
            lut: lut_hex,
            univariate: self
                .provenance
                .as_ref()
                .map(|p| p.terms().iter().map(|&(c, e)| (format!("0x{c:x}"), e)).collect()),
        }
    }

    pub fn from_record(rec: &VbfRecord) -> Result<Vbf, VbfError> {
        let bad = |m: &str| VbfError::MalformedRecord(m.into());
        let modulus = parse_hex_u32(&rec.modulus).ok_or_else(|| bad("modulus"))?;
        let spec = FieldSpec::new(rec.n, Some(modulus))
            .map_err(|e| VbfError::MalformedRecord(e.to_string()))?;
        let w = entry_width(rec.n);
        if rec.lut.len() != spec.size() * w {
            return Err(bad("lut length"));
        }
        let mut lut = Vec::with_capacity(spec.size());
        for i in 0..spec.size() {
            let s = &rec.lut[i * w..(i + 1) * w];
            let v = u16::from_str_radix(s, 16).map_err(|_| bad("lut digits"))?;
            if v as usize >= spec.size() {
                return Err(bad("lut value"));
            }
            lut.push(v);
        }
        let provenance = match &rec.univariate {
            None => None,
            Some(terms) => {
                let mut ts = Vec::with_capacity(terms.len());
                for (c, e) in terms {
                    let c = parse_hex_u32(c).ok_or_else(|| bad("coefficient"))? as Elt;
                    if c as usize >= spec.size() {
                        return Err(bad("coefficient value"));
                    }
                    if *e > spec.order() as u32 {
                        return Err(VbfError::ExponentOutOfRange(*e));
                    }
                    ts.push((c, *e));
                }
                Some(UnivariatePoly::new(&ts))
            }
        };
        Ok(Vbf { spec, lut, provenance })
    }
}

/// Hex digits needed per table entry: ceil(n/4).
fn entry_width(n: u32) -> usize {
    ((n + 3) / 4) as usize
}

fn parse_hex_u32(s: &str) -> Option<u32> {
    let t = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u32::from_str_radix(t, 16).ok()
}

/// Serialized form of a [`Vbf`]: field parameters, the table as
/// fixed-width hex, and the defining polynomial when known.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct VbfRecord {
    pub n: u32,
    pub modulus: String,
    pub lut: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub univariate: Option<Vec<(String, u32)>>,
}
