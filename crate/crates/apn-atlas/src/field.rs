//! Arithmetic in GF(2^n) for 2 <= n <= 16.
//!
//! Elements are plain integers below 2^n, interpreted against an explicitly
//! passed [`FieldSpec`]; bit i of an element is the coefficient of x^i in its
//! polynomial representation. A spec fixes the defining modulus and checks
//! that the class of x generates the multiplicative group, which lets every
//! product go through discrete-log tables.

use std::sync::Arc;
use thiserror::Error;

/// A field element. Always reduced below 2^n for the spec it is used with.
pub type Elt = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusDefect {
    Reducible,
    Imprimitive,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus rejected: {0:?}")]
    RejectedModulus(ModulusDefect),
    #[error("degree {0} outside supported range 2..=16")]
    UnsupportedDegree(u32),
    #[error("modulus 0x{0:x} is not a degree-{1} polynomial")]
    WrongDegree(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} does not divide {1}: no such subfield")]
    InvalidSubfield(u32, u32),
    #[error("zero element not allowed here")]
    ZeroElement,
    #[error("zero polynomial not allowed here")]
    ZeroPolynomial,
}

/// Lexicographically smallest primitive polynomial of each degree, encoded as
/// a bitmask (bit i = coefficient of x^i). Index by degree; entries 0 and 1
/// are unused. Regenerated from scratch by a test.
pub const DEFAULT_MODULI: [u32; 17] = [
    0, 0, 0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11d, 0x211, 0x409, 0x805, 0x1053, 0x201b, 0x402b,
    0x8003, 0x1002d,
];

/// A validated description of GF(2^n): modulus, generator, and the log/antilog
/// tables every operation runs on.
#[derive(Clone)]
pub struct FieldSpec {
    n: u32,
    modulus: u32,
    /// The element x (encoding 0b10); checked primitive at construction.
    generator: Elt,
    tables: Arc<Tables>,
}

struct Tables {
    /// alog[i] = x^i for i in 0..2^n-1.
    alog: Vec<Elt>,
    /// log[e] = i with x^i = e, for e != 0; log[0] is unused.
    log: Vec<u16>,
    /// tr_mask[e] has bit j set iff tr(e * x^j) = 1, so that
    /// tr(e * v) = parity(tr_mask[e] & v).
    tr_mask: Vec<Elt>,
    /// absolute trace of each element, 0 or 1.
    tr1: Vec<u8>,
}

impl std::fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpec")
            .field("n", &self.n)
            .field("modulus", &format_args!("0x{:x}", self.modulus))
            .field("generator", &self.generator)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.modulus == other.modulus
    }
}
impl Eq for FieldSpec {}

/// Carry-less product of two GF(2)[x] polynomials (no reduction).
fn clmul(a: u32, b: u32) -> u64 {
    let mut acc = 0u64;
    let mut i = 0;
    while b >> i != 0 {
        if (b >> i) & 1 == 1 {
            acc ^= (a as u64) << i;
        }
        i += 1;
    }
    acc
}

fn poly_deg(p: u64) -> i32 {
    63 - p.leading_zeros() as i32 // -64 for p == 0 is never queried
}

/// Remainder of a modulo m in GF(2)[x]; m != 0.
fn poly_mod(mut a: u64, m: u64) -> u64 {
    let dm = poly_deg(m);
    while a != 0 && poly_deg(a) >= dm {
        a ^= m << (poly_deg(a) - dm);
    }
    a
}

/// Irreducibility over GF(2) by trial division.
fn gf2_poly_irreducible(f: u32) -> bool {
    let d = poly_deg(f as u64);
    if d <= 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    if f & 1 == 0 {
        return false; // divisible by x
    }
    for g in 2u32..=(1u32 << (d / 2 + 1)) {
        if poly_deg(g as u64) > d / 2 {
            break;
        }
        if poly_mod(f as u64, g as u64) == 0 {
            return false;
        }
    }
    true
}

impl FieldSpec {
    /// Build GF(2^n). With `modulus: None` the default modulus for n is used;
    /// otherwise the given bitmask must be a degree-n polynomial that is
    /// irreducible with x primitive, or the spec is rejected.
    pub fn new(n: u32, modulus: Option<u32>) -> Result<FieldSpec, FieldError> {
        if !(2..=16).contains(&n) {
            return Err(FieldError::UnsupportedDegree(n));
        }
        let m = modulus.unwrap_or(DEFAULT_MODULI[n as usize]);
        if poly_deg(m as u64) != n as i32 {
            return Err(FieldError::WrongDegree(m, n));
        }
        if !gf2_poly_irreducible(m) {
            return Err(FieldError::RejectedModulus(ModulusDefect::Reducible));
        }

        let size = 1usize << n;
        let order = (size - 1) as u64;
        let mask = (size - 1) as Elt;
        let low = (m & (size as u32 - 1)) as Elt; // modulus minus its leading term

        // alog by repeated multiplication by x; the cycle length of x is its
        // multiplicative order.
        let mut alog = vec![0 as Elt; size - 1];
        let mut cur: Elt = 1;
        for (i, slot) in alog.iter_mut().enumerate() {
            *slot = cur;
            let hi = cur >> (n - 1) & 1;
            cur = (cur << 1) & mask;
            if hi == 1 {
                cur ^= low;
            }
            if cur == 1 && (i as u64) < order - 1 {
                return Err(FieldError::RejectedModulus(ModulusDefect::Imprimitive));
            }
        }
        if cur != 1 {
            // cannot happen for an irreducible modulus, but keep the guard
            return Err(FieldError::RejectedModulus(ModulusDefect::Imprimitive));
        }
        let mut log = vec![0u16; size];
        for (i, &e) in alog.iter().enumerate() {
            log[e as usize] = i as u16;
        }

        // Absolute traces, then bit masks for the bilinear form tr(e*v).
        let mut tr1 = vec![0u8; size];
        for e in 1..size {
            let mut acc = e as Elt;
            let mut s = e as Elt;
            for _ in 1..n {
                // square via log tables is unavailable yet; square by clmul
                s = {
                    let sq = clmul(s as u32, s as u32);
                    poly_mod(sq, m as u64) as Elt
                };
                acc ^= s;
            }
            debug_assert!(acc == 0 || acc == 1);
            tr1[e] = acc as u8;
        }
        let mut tr_mask = vec![0 as Elt; size];
        // tr_mask is linear in e, so fill from the basis rows.
        let mut basis_mask = [0 as Elt; 16];
        for i in 0..n {
            let mut mk: Elt = 0;
            for j in 0..n {
                let prod = poly_mod(clmul(1 << i, 1 << j), m as u64) as usize;
                if tr1[prod] == 1 {
                    mk |= 1 << j;
                }
            }
            basis_mask[i as usize] = mk;
        }
        for e in 1..size {
            let mut mk: Elt = 0;
            let mut bits = e;
            while bits != 0 {
                let i = bits.trailing_zeros();
                mk ^= basis_mask[i as usize];
                bits &= bits - 1;
            }
            tr_mask[e] = mk;
        }

        Ok(FieldSpec {
            n,
            modulus: m,
            generator: 2,
            tables: Arc::new(Tables { alog, log, tr_mask, tr1 }),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn modulus(&self) -> u32 {
        self.modulus
    }
    pub fn generator(&self) -> Elt {
        self.generator
    }
    /// 2^n, the number of field elements.
    pub fn size(&self) -> usize {
        1usize << self.n
    }
    /// 2^n - 1, the order of the multiplicative group.
    pub fn order(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> {
        0..(self.size() as Elt)
    }

    #[inline]
    pub fn add(&self, a: Elt, b: Elt) -> Elt {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.tables;
        let s = t.log[a as usize] as u32 + t.log[b as usize] as u32;
        let order = self.order() as u32;
        let s = if s >= order { s - order } else { s };
        t.alog[s as usize]
    }

    #[inline]
    pub fn square(&self, a: Elt) -> Elt {
        self.mul(a, a)
    }

    /// a^k with exponents reduced mod 2^n-1 for nonzero a; 0^0 = 1, 0^k = 0
    /// for k > 0, and negative exponents of 0 are a division by zero.
    pub fn pow(&self, a: Elt, k: i64) -> Result<Elt, FieldError> {
        if a == 0 {
            return match k.cmp(&0) {
                std::cmp::Ordering::Equal => Ok(1),
                std::cmp::Ordering::Greater => Ok(0),
                std::cmp::Ordering::Less => Err(FieldError::DivisionByZero),
            };
        }
        let order = self.order() as i64;
        let e = k.rem_euclid(order) as u32;
        let t = &self.tables;
        let idx = (t.log[a as usize] as u64 * e as u64) % self.order();
        Ok(t.alog[idx as usize])
    }

    /// Exponentiation with a pre-reduced nonnegative exponent; a != 0 is not
    /// required (0^0 = 1, 0^e = 0).
    #[inline]
    pub fn pow_u(&self, a: Elt, e: u64) -> Elt {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let t = &self.tables;
        let idx = (t.log[a as usize] as u64 * (e % self.order())) % self.order();
        t.alog[idx as usize]
    }

    pub fn inv(&self, a: Elt) -> Result<Elt, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        self.pow(a, self.size() as i64 - 2)
    }

    /// Discrete log base x of a nonzero element.
    pub fn dlog(&self, a: Elt) -> Result<u64, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroElement);
        }
        Ok(self.tables.log[a as usize] as u64)
    }

    /// x^i.
    #[inline]
    pub fn alog(&self, i: u64) -> Elt {
        self.tables.alog[(i % self.order()) as usize]
    }

    /// Trace onto the subfield GF(2^m): sum of the n/m conjugates of e under
    /// the 2^m-power Frobenius. Requires m | n.
    pub fn trace(&self, m: u32, e: Elt) -> Result<Elt, FieldError> {
        if m == 0 || self.n % m != 0 {
            return Err(FieldError::InvalidSubfield(m, self.n));
        }
        let mut acc = e;
        let mut conj = e;
        for _ in 1..(self.n / m) {
            for _ in 0..m {
                conj = self.square(conj);
            }
            acc ^= conj;
        }
        Ok(acc)
    }

    /// Absolute trace tr_1^n as a bit.
    #[inline]
    pub fn tr1(&self, e: Elt) -> u8 {
        self.tables.tr1[e as usize]
    }

    /// Parity of the trace bilinear form tr(a * v), via precomputed masks.
    #[inline]
    pub fn tr_form(&self, a: Elt, v: Elt) -> u8 {
        ((self.tables.tr_mask[a as usize] & v).count_ones() & 1) as u8
    }

    /// Bit mask m_a with tr(a*v) = parity(m_a & v).
    #[inline]
    pub fn tr_mask(&self, a: Elt) -> Elt {
        self.tables.tr_mask[a as usize]
    }

    /// Multiplicative order of a nonzero element.
    pub fn elt_order(&self, e: Elt) -> Result<u64, FieldError> {
        if e == 0 {
            return Err(FieldError::ZeroElement);
        }
        let group = self.order();
        let l = self.tables.log[e as usize] as u64;
        Ok(group / gcd(group, l))
    }

    pub fn is_primitive(&self, e: Elt) -> Result<bool, FieldError> {
        Ok(self.elt_order(e)? == self.order())
    }

    /// Whether e is a cube. Zero counts as 0^3; for nonzero e this is decided
    /// by the order of the cube subgroup.
    pub fn is_cube(&self, e: Elt) -> bool {
        if e == 0 {
            return true;
        }
        let order = self.order();
        if order % 3 != 0 {
            return true;
        }
        self.pow_u(e, order / 3) == 1
    }

    /// Elements of the subfield GF(2^k) inside this field, ascending. k | n.
    pub fn subfield(&self, k: u32) -> Result<Vec<Elt>, FieldError> {
        if k == 0 || self.n % k != 0 {
            return Err(FieldError::InvalidSubfield(k, self.n));
        }
        let step = self.order() / ((1u64 << k) - 1);
        let mut out = vec![0 as Elt, 1];
        for j in 1..((1u64 << k) - 1) {
            out.push(self.alog(j * step));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Whether e lies in the subfield GF(2^k) (k | n assumed valid).
    pub fn in_subfield(&self, k: u32, e: Elt) -> bool {
        if e == 0 {
            return true;
        }
        let sub = (1u64 << k) - 1;
        (self.tables.log[e as usize] as u64 * sub) % self.order() == 0
    }

    /// Irreducibility over GF(2^n) of a polynomial with coefficients in this
    /// field (coeffs[i] is the coefficient of X^i). Squarefree check by
    /// gcd(f, f'), then Frobenius gcd steps gcd(f, X^{Q^k} - X) for
    /// k = 1..=deg/2 with Q = 2^n.
    pub fn irreducible_over_extension(&self, coeffs: &[Elt]) -> Result<bool, FieldError> {
        let mut f: Vec<Elt> = coeffs.to_vec();
        while f.last() == Some(&0) {
            f.pop();
        }
        if f.is_empty() {
            return Err(FieldError::ZeroPolynomial);
        }
        let deg = f.len() - 1;
        if deg == 0 {
            return Ok(false); // nonzero constants are units
        }
        if deg == 1 {
            return Ok(true);
        }
        // monic normalisation
        let lead_inv = self.inv(*f.last().unwrap())?;
        for c in f.iter_mut() {
            *c = self.mul(*c, lead_inv);
        }

        // derivative: d/dX of sum c_i X^i = sum over odd i of c_i X^(i-1)
        let mut fp = vec![0 as Elt; deg];
        for (i, &c) in f.iter().enumerate().skip(1) {
            if i % 2 == 1 {
                fp[i - 1] = c;
            }
        }
        let g = self.ext_gcd_poly(&f, &fp);
        if g.len() != 1 {
            return Ok(false); // not squarefree (covers f' = 0 too)
        }

        // Frobenius ladder: xq = X^(Q^k) mod f.
        let mut xq = vec![0 as Elt, 1]; // X
        for _ in 0..deg / 2 {
            for _ in 0..self.n {
                let sq = self.ext_mulmod(&xq, &xq, &f);
                xq = sq;
            }
            // gcd(f, xq - X)
            let mut diff = xq.clone();
            if diff.len() < 2 {
                diff.resize(2, 0);
            }
            diff[1] ^= 1;
            while diff.last() == Some(&0) {
                diff.pop();
            }
            let g = self.ext_gcd_poly(&f, &diff);
            if g.len() != 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn ext_mulmod(&self, a: &[Elt], b: &[Elt], m: &[Elt]) -> Vec<Elt> {
        let mut prod = vec![0 as Elt; a.len() + b.len() - 1];
        for (i, &ca) in a.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (j, &cb) in b.iter().enumerate() {
                prod[i + j] ^= self.mul(ca, cb);
            }
        }
        self.ext_rem(&mut prod, m);
        prod
    }

    /// In-place remainder of a by monic-or-not m (m nonzero, deg >= 1).
    fn ext_rem(&self, a: &mut Vec<Elt>, m: &[Elt]) {
        let dm = m.len() - 1;
        let lead_inv = self.inv(m[dm]).expect("nonzero leading coefficient");
        while a.len() > dm {
            let da = a.len() - 1;
            let c = self.mul(a[da], lead_inv);
            if c != 0 {
                for (i, &mc) in m.iter().enumerate() {
                    a[da - dm + i] ^= self.mul(c, mc);
                }
            }
            a.pop();
            while a.last() == Some(&0) {
                a.pop();
            }
            if a.is_empty() {
                break;
            }
        }
    }

    fn ext_gcd_poly(&self, a: &[Elt], b: &[Elt]) -> Vec<Elt> {
        let mut a: Vec<Elt> = a.to_vec();
        let mut b: Vec<Elt> = b.to_vec();
        while a.last() == Some(&0) {
            a.pop();
        }
        while b.last() == Some(&0) {
            b.pop();
        }
        while !b.is_empty() {
            self.ext_rem(&mut a, &b);
            std::mem::swap(&mut a, &mut b);
        }
        if a.is_empty() {
            return a;
        }
        // normalise so deg-0 gcds compare equal
        let inv = self.inv(*a.last().unwrap()).unwrap();
        for c in a.iter_mut() {
            *c = self.mul(*c, inv);
        }
        a
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Smallest primitive modulus of degree n found by direct search; used to
/// regenerate [`DEFAULT_MODULI`].
pub fn search_default_modulus(n: u32) -> u32 {
    let lo = 1u32 << n;
    for m in (lo | 1..lo << 1).step_by(2) {
        if gf2_poly_irreducible(m) && FieldSpec::new(n, Some(m)).is_ok() {
            return m;
        }
    }
    unreachable!("primitive polynomials exist in every degree")
}
