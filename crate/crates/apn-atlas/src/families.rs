//! Generators for the known infinite families of APN functions.
//!
//! Each family couples a parametrised shape (a power exponent or a short
//! multinomial, sometimes wrapped around a subfield trace) with arithmetic
//! side conditions on the parameters. [`enumerate_with`] sweeps the
//! parameter space of one family over one field, filters by the side
//! conditions, verifies APN-ness on every survivor, deduplicates by value
//! table and streams the results to a callback, reporting how many tuples
//! fell at each stage.
//!
//! A family that does not apply to a dimension at all (an odd n for a
//! family needing n = 2m, say) yields an empty sweep with zero candidates
//! rather than an error.

use crate::analysis::{is_apn_lut, is_apn_quadratic_lut};
use crate::field::{Elt, FieldSpec};
use crate::vbf::{UnivariatePoly, Vbf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Hard ceiling on the number of parameter tuples an exhaustive sweep may
/// visit. Larger spaces must be sampled.
pub const EXHAUSTIVE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("{family} over n={n}: exhaustive sweep of {tuples} tuples exceeds the budget of {budget}")]
    StrategyInfeasible {
        family: FamilyId,
        n: u32,
        tuples: u128,
        budget: u64,
    },
    #[error("condition violated: {0}")]
    ConditionViolated(String),
}

/// The fourteen implemented families. `F*` names follow the customary
/// numbering of the quadratic multinomial families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyId {
    Gold,
    Kasami,
    Welch,
    Niho,
    Inverse,
    Dobbertin,
    F1_2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8_10,
    F11,
}

impl FamilyId {
    pub const ALL: [FamilyId; 14] = [
        FamilyId::Gold,
        FamilyId::Kasami,
        FamilyId::Welch,
        FamilyId::Niho,
        FamilyId::Inverse,
        FamilyId::Dobbertin,
        FamilyId::F1_2,
        FamilyId::F3,
        FamilyId::F4,
        FamilyId::F5,
        FamilyId::F6,
        FamilyId::F7,
        FamilyId::F8_10,
        FamilyId::F11,
    ];

    /// Name used on the command line and in config files.
    pub fn cli_name(self) -> &'static str {
        match self {
            FamilyId::Gold => "gold",
            FamilyId::Kasami => "kasami",
            FamilyId::Welch => "welch",
            FamilyId::Niho => "niho",
            FamilyId::Inverse => "inverse",
            FamilyId::Dobbertin => "dobbertin",
            FamilyId::F1_2 => "f1-2",
            FamilyId::F3 => "f3",
            FamilyId::F4 => "f4",
            FamilyId::F5 => "f5",
            FamilyId::F6 => "f6",
            FamilyId::F7 => "f7",
            FamilyId::F8_10 => "f8-10",
            FamilyId::F11 => "f11",
        }
    }

    pub fn from_cli_name(s: &str) -> Option<FamilyId> {
        FamilyId::ALL.iter().copied().find(|f| f.cli_name() == s)
    }

    /// Display label used in human-readable tables.
    pub fn label(self) -> &'static str {
        match self {
            FamilyId::Gold => "Gold",
            FamilyId::Kasami => "Kasami",
            FamilyId::Welch => "Welch",
            FamilyId::Niho => "Niho",
            FamilyId::Inverse => "Inverse",
            FamilyId::Dobbertin => "Dobbertin",
            FamilyId::F1_2 => "N°1-2",
            FamilyId::F3 => "N°3",
            FamilyId::F4 => "N°4",
            FamilyId::F5 => "N°5",
            FamilyId::F6 => "N°6",
            FamilyId::F7 => "N°7",
            FamilyId::F8_10 => "N°8-10",
            FamilyId::F11 => "N°11",
        }
    }

    /// True for the six monomial families x^d.
    pub fn is_power(self) -> bool {
        matches!(
            self,
            FamilyId::Gold
                | FamilyId::Kasami
                | FamilyId::Welch
                | FamilyId::Niho
                | FamilyId::Inverse
                | FamilyId::Dobbertin
        )
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

/// Printable shape of an instance: a plain polynomial, or a polynomial
/// plus a coefficient times a subfield trace of an inner polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolicForm {
    Poly(UnivariatePoly),
    TraceExpr {
        outer: UnivariatePoly,
        /// Coefficient in front of the trace; 1 prints as a bare tr(...).
        pre: Elt,
        /// Subfield degree m of the trace tr_m^n.
        sub: u32,
        inner: UnivariatePoly,
    },
}

impl SymbolicForm {
    /// Number of monomials, counting the terms inside a trace.
    pub fn monomial_count(&self) -> usize {
        match self {
            SymbolicForm::Poly(p) => p.terms().len(),
            SymbolicForm::TraceExpr { outer, inner, .. } => {
                outer.terms().len() + inner.terms().len()
            }
        }
    }

    /// All exponents in ascending order, counting the terms inside a trace.
    pub fn exponents(&self) -> Vec<u32> {
        let mut e: Vec<u32> = match self {
            SymbolicForm::Poly(p) => p.terms().iter().map(|t| t.1).collect(),
            SymbolicForm::TraceExpr { outer, inner, .. } => outer
                .terms()
                .iter()
                .chain(inner.terms().iter())
                .map(|t| t.1)
                .collect(),
        };
        e.sort_unstable();
        e
    }

    /// Discrete logs of all coefficients (1 maps to 0), in term order,
    /// outer terms first, then the trace coefficient, then inner terms.
    pub fn coeff_complexities(&self, spec: &FieldSpec) -> Vec<u64> {
        let dl = |c: Elt| spec.dlog(c).expect("nonzero coefficient");
        match self {
            SymbolicForm::Poly(p) => p.terms().iter().map(|t| dl(t.0)).collect(),
            SymbolicForm::TraceExpr {
                outer, pre, inner, ..
            } => {
                let mut v: Vec<u64> = outer.terms().iter().map(|t| dl(t.0)).collect();
                v.push(dl(*pre));
                v.extend(inner.terms().iter().map(|t| dl(t.0)));
                v
            }
        }
    }

    pub fn render(&self, spec: &FieldSpec) -> String {
        match self {
            SymbolicForm::Poly(p) => p.render(spec),
            SymbolicForm::TraceExpr {
                outer,
                pre,
                sub,
                inner,
            } => {
                let mut s = String::new();
                if !outer.is_zero() {
                    s.push_str(&outer.render(spec));
                    s.push_str(" + ");
                }
                let j = spec.dlog(*pre).expect("nonzero trace coefficient");
                if j != 0 {
                    // Prefer the shorter of a^j and a^-(order-j).
                    let ord = spec.order();
                    if 2 * j > ord {
                        s.push_str(&format!("a^-{}*", ord - j));
                    } else if j == 1 {
                        s.push_str("a*");
                    } else {
                        s.push_str(&format!("a^{j}*"));
                    }
                }
                s.push_str(&format!("tr({}; {})", sub, inner.render(spec)));
                s
            }
        }
    }
}

/// One concrete member of a family: the parameter tuple that produced it
/// and the resulting verified-APN function.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub family: FamilyId,
    pub n: u32,
    /// Named parameters in family order; field elements are stored by
    /// their encoding.
    pub params: Vec<(String, u64)>,
    pub form: SymbolicForm,
    pub function: Vbf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumStrategy {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
}

/// Funnel counters for one sweep. `candidates` counts tuples whose
/// individual parameters lie in their declared ranges; `condition_passed`
/// additionally satisfy the cross-parameter conditions; `apn_passed`
/// also pass the APN check; `emitted` survive value-table dedup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumStats {
    pub candidates: u64,
    pub condition_passed: u64,
    pub apn_passed: u64,
    pub emitted: u64,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub instances: Vec<FamilyInstance>,
    pub stats: EnumStats,
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Reduce an exponent modulo 2^n - 1 as a function on the field: positive
/// multiples of 2^n - 1 stay at 2^n - 1 (x^(2^n-1) is the 0/1 indicator,
/// not the constant 1).
pub fn reduce_exponent(spec: &FieldSpec, e: u64) -> u32 {
    if e == 0 {
        return 0;
    }
    let ord = spec.order();
    let r = e % ord;
    (if r == 0 { ord } else { r }) as u32
}

fn lut_digest(spec: &FieldSpec, lut: &[u16]) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update(spec.n().to_le_bytes());
    h.update(spec.modulus().to_le_bytes());
    for &v in lut {
        h.update(v.to_le_bytes());
    }
    let d = h.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&d[..16]);
    out
}

/// Shared per-sweep state: the funnel counters, the dedup set and the
/// output callback.
struct Sweep<'a> {
    spec: &'a FieldSpec,
    family: FamilyId,
    stats: EnumStats,
    seen: HashSet<[u8; 16]>,
    sink: &'a mut dyn FnMut(FamilyInstance),
}

impl<'a> Sweep<'a> {
    fn new(spec: &'a FieldSpec, family: FamilyId, sink: &'a mut dyn FnMut(FamilyInstance)) -> Self {
        Sweep {
            spec,
            family,
            stats: EnumStats::default(),
            seen: HashSet::new(),
            sink,
        }
    }

    /// A tuple whose cross-parameter conditions all hold, with its value
    /// table built. Verifies APN-ness (by derivative ranks when the shape
    /// is quadratic by construction, else by the full difference table),
    /// dedups, and emits. Parameter and form construction is deferred to
    /// the closure so rejected tuples cost nothing beyond the check.
    fn offer(
        &mut self,
        lut: &[u16],
        quadratic: bool,
        make: impl FnOnce() -> (Vec<(String, u64)>, SymbolicForm),
    ) {
        self.stats.condition_passed += 1;
        let ok = if quadratic {
            is_apn_quadratic_lut(self.spec.n(), lut)
        } else {
            is_apn_lut(lut)
        };
        if !ok {
            return;
        }
        self.stats.apn_passed += 1;
        if !self.seen.insert(lut_digest(self.spec, lut)) {
            return;
        }
        self.stats.emitted += 1;
        let (params, form) = make();
        let base = Vbf::from_lut(self.spec, lut.to_vec()).expect("table built over this field");
        let function = match &form {
            SymbolicForm::Poly(p) => base.with_provenance(p.clone()),
            SymbolicForm::TraceExpr { .. } => base,
        };
        (self.sink)(FamilyInstance {
            family: self.family,
            n: self.spec.n(),
            params,
            form,
            function,
        });
    }
}

/// Monomial value table x -> x^e with the exponent already reduced.
/// Asserts the quadratic shape (weight <= 2) that the rank-based APN
/// check relies on.
fn monomial_table(spec: &FieldSpec, e: u32, require_quadratic: bool) -> Vec<Elt> {
    if require_quadratic {
        assert!(e.count_ones() <= 2, "exponent {e} is not quadratic");
    }
    (0..spec.size()).map(|x| spec.pow_u(x as Elt, e as u64)).collect()
}

fn poly_of(terms: &[(Elt, u32)]) -> UnivariatePoly {
    UnivariatePoly::new(terms)
}

fn named(pairs: &[(&str, u64)]) -> Vec<(String, u64)> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

// ---------------------------------------------------------------------------
// Power families
// ---------------------------------------------------------------------------

/// Exponent of a power family at dimension n. Gold and Kasami take the
/// parameter i; the other four have no free parameter (Welch, Niho and
/// the inverse exponent need n = 2t+1, Dobbertin needs n = 5i).
pub fn power_exponent(family: FamilyId, n: u32, i: Option<u32>) -> Result<u64, FamilyError> {
    let viol = |s: &str| FamilyError::ConditionViolated(s.to_string());
    match family {
        FamilyId::Gold => {
            let i = i.ok_or_else(|| viol("missing parameter i"))?;
            if i == 0 || i >= n || gcd(i as u64, n as u64) != 1 {
                return Err(viol("gcd(i, n) = 1 with 0 < i < n"));
            }
            Ok((1u64 << i) + 1)
        }
        FamilyId::Kasami => {
            let i = i.ok_or_else(|| viol("missing parameter i"))?;
            if i == 0 || i >= n || gcd(i as u64, n as u64) != 1 {
                return Err(viol("gcd(i, n) = 1 with 0 < i < n"));
            }
            Ok((1u64 << (2 * i)) - (1u64 << i) + 1)
        }
        FamilyId::Welch => {
            if n % 2 == 0 || n < 3 {
                return Err(viol("n = 2t + 1"));
            }
            let t = (n - 1) / 2;
            Ok((1u64 << t) + 3)
        }
        FamilyId::Niho => {
            if n % 2 == 0 || n < 3 {
                return Err(viol("n = 2t + 1"));
            }
            let t = (n - 1) / 2;
            Ok(if t % 2 == 0 {
                (1u64 << t) + (1u64 << (t / 2)) - 1
            } else {
                (1u64 << t) + (1u64 << ((3 * t + 1) / 2)) - 1
            })
        }
        FamilyId::Inverse => {
            if n % 2 == 0 || n < 3 {
                return Err(viol("n = 2t + 1"));
            }
            Ok((1u64 << (n - 1)) - 1)
        }
        FamilyId::Dobbertin => {
            if n % 5 != 0 {
                return Err(viol("n = 5i"));
            }
            let i = n / 5;
            Ok((1u64 << (4 * i)) + (1u64 << (3 * i)) + (1u64 << (2 * i)) + (1u64 << i) - 1)
        }
        _ => Err(viol("not a power family")),
    }
}

fn sweep_power(sw: &mut Sweep, family: FamilyId, strategy: &EnumStrategy) {
    let n = sw.spec.n();
    // Valid parameter tuples: Gold and Kasami scan i over its full range,
    // keeping both i and n-i (the two give equivalent functions, which
    // later classification collapses); the other four admit at most one
    // tuple per dimension.
    let mut shapes: Vec<(Option<u32>, u64)> = Vec::new();
    match family {
        FamilyId::Gold | FamilyId::Kasami => {
            for i in 1..n {
                if let Ok(d) = power_exponent(family, n, Some(i)) {
                    shapes.push((Some(i), d));
                }
            }
        }
        _ => {
            if let Ok(d) = power_exponent(family, n, None) {
                shapes.push((None, d));
            }
        }
    }
    // These spaces are tiny; sampling just truncates the scan.
    let limit = match strategy {
        EnumStrategy::Exhaustive => usize::MAX,
        EnumStrategy::Sampled { count, .. } => *count as usize,
    };
    for (i, d) in shapes.into_iter().take(limit) {
        sw.stats.candidates += 1;
        let e = reduce_exponent(sw.spec, d);
        let f = Vbf::power(sw.spec, e).expect("reduced exponent in range");
        // A weight-2 exponent gives a quadratic monomial, so the rank
        // check applies; higher weights take the full difference table.
        sw.offer(f.lut(), e.count_ones() <= 2, || {
            let mut params = Vec::new();
            if let Some(i) = i {
                params.push(("i".to_string(), i as u64));
            }
            params.push(("d".to_string(), e as u64));
            (params, SymbolicForm::Poly(poly_of(&[(1, e)])))
        });
    }
}

// ---------------------------------------------------------------------------
// Quadratic multinomial families
// ---------------------------------------------------------------------------

/// x^(2^s+1) + alpha^(2^k-1) x^(2^(ik) + 2^(mk+s)) over n = pk, p in {3,4},
/// gcd(k,p) = gcd(s,pk) = 1, i = sk mod p, m = p - i, n >= 12, alpha
/// primitive.
fn sweep_f1_2(sw: &mut Sweep, strategy: &EnumStrategy) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    if n < 12 {
        return Ok(());
    }
    let mut shapes = Vec::new();
    for p in [3u32, 4] {
        if n % p != 0 || gcd((n / p) as u64, p as u64) != 1 {
            continue;
        }
        let k = n / p;
        for s in 1..=n {
            if gcd(s as u64, n as u64) != 1 {
                continue;
            }
            let i = (s * k) % p;
            let m = p - i;
            let e1 = reduce_exponent(&spec, (1u64 << s) + 1);
            let e2 = reduce_exponent(&spec, (1u64 << (i * k)) + (1u64 << (m * k + s)));
            shapes.push((p, k, s, i, m, e1, e2));
        }
    }
    let primitives: Vec<Elt> = spec
        .elements()
        .filter(|&a| spec.is_primitive(a).unwrap_or(false))
        .collect();
    let space = shapes.len() as u128 * primitives.len() as u128;
    match strategy {
        EnumStrategy::Exhaustive => {
            if space > EXHAUSTIVE_BUDGET as u128 {
                return Err(FamilyError::StrategyInfeasible {
                    family: FamilyId::F1_2,
                    n,
                    tuples: space,
                    budget: EXHAUSTIVE_BUDGET,
                });
            }
            for &(p, k, s, i, m, e1, e2) in &shapes {
                let t1 = monomial_table(&spec, e1, true);
                let t2 = monomial_table(&spec, e2, true);
                for &alpha in &primitives {
                    f1_2_tuple(sw, (p, k, s, i, m, e1, e2), &t1, &t2, alpha);
                }
            }
        }
        EnumStrategy::Sampled { count, seed } => {
            if shapes.is_empty() || primitives.is_empty() {
                return Ok(());
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            for _ in 0..*count {
                let shape = shapes[rng.gen_range(0..shapes.len())];
                let alpha = primitives[rng.gen_range(0..primitives.len())];
                let t1 = monomial_table(&spec, shape.5, true);
                let t2 = monomial_table(&spec, shape.6, true);
                f1_2_tuple(sw, shape, &t1, &t2, alpha);
            }
        }
    }
    Ok(())
}

fn f1_2_tuple(
    sw: &mut Sweep,
    (p, k, s, i, m, e1, e2): (u32, u32, u32, u32, u32, u32, u32),
    t1: &[Elt],
    t2: &[Elt],
    alpha: Elt,
) {
    let spec = sw.spec.clone();
    sw.stats.candidates += 1;
    let coeff = spec.pow_u(alpha, (1u64 << k) - 1);
    let lut: Vec<u16> = (0..spec.size())
        .map(|x| t1[x] ^ spec.mul(coeff, t2[x]))
        .collect();
    sw.offer(&lut, true, || {
        (
            named(&[
                ("p", p as u64),
                ("k", k as u64),
                ("s", s as u64),
                ("i", i as u64),
                ("m", m as u64),
                ("alpha", alpha as u64),
            ]),
            SymbolicForm::Poly(poly_of(&[(1, e1), (coeff, e2)])),
        )
    });
}

/// x^(2^(2i)+2^i) + b x^(q+1) + c x^(q(2^(2i)+2^i)) over n = 2m, q = 2^m,
/// gcd(i,m) = 1, gcd(2^i+1, q+1) != 1, b nonzero with c b^q + b != 0,
/// c outside the (2^i+1)(q-1)-th power subgroup with c^(q+1) = 1.
fn sweep_f3(sw: &mut Sweep, strategy: &EnumStrategy) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    if n % 2 != 0 {
        return Ok(());
    }
    let m = n / 2;
    let q = 1u64 << m;
    let ord = spec.order();
    // (i, c) pairs whose single-parameter conditions hold, with the shape
    // exponents. The excluded set for c is the image subgroup of
    // x -> x^((2^i+1)(q-1)); membership is an order test.
    let mut pairs: Vec<(u32, Elt, u32, u32)> = Vec::new();
    for i in 1..m {
        if gcd(i as u64, m as u64) != 1 || gcd((1u64 << i) + 1, q + 1) == 1 {
            continue;
        }
        let e_in = (1u64 << (2 * i)) + (1u64 << i);
        let e1 = reduce_exponent(&spec, e_in);
        let e2 = reduce_exponent(&spec, q * e_in);
        let excl_ord = ord / gcd(((1u64 << i) + 1) * (q - 1), ord);
        for c in 1..spec.size() {
            let c = c as Elt;
            if spec.pow_u(c, q + 1) != 1 {
                continue;
            }
            if spec.pow_u(c, excl_ord) == 1 {
                continue;
            }
            pairs.push((i, c, e1, e2));
        }
    }
    let b_count = ord as u128;
    let space = pairs.len() as u128 * b_count;
    let eq1 = reduce_exponent(&spec, q + 1);
    let per_tuple = |sw: &mut Sweep, (i, c, e1, e2): (u32, Elt, u32, u32), b: Elt, tabs: &(Vec<Elt>, Vec<Elt>, Vec<Elt>)| {
        let spec = sw.spec.clone();
        sw.stats.candidates += 1;
        if spec.mul(c, spec.pow_u(b, q)) ^ b == 0 {
            return;
        }
        let (t1, tq, t2) = tabs;
        let lut: Vec<u16> = (0..spec.size())
            .map(|x| t1[x] ^ spec.mul(b, tq[x]) ^ spec.mul(c, t2[x]))
            .collect();
        sw.offer(&lut, true, || {
            (
                named(&[("i", i as u64), ("b", b as u64), ("c", c as u64)]),
                SymbolicForm::Poly(poly_of(&[(1, e1), (b, eq1), (c, e2)])),
            )
        });
    };
    match strategy {
        EnumStrategy::Exhaustive => {
            if space > EXHAUSTIVE_BUDGET as u128 {
                return Err(FamilyError::StrategyInfeasible {
                    family: FamilyId::F3,
                    n,
                    tuples: space,
                    budget: EXHAUSTIVE_BUDGET,
                });
            }
            let mut cur_i = u32::MAX;
            let mut tabs = (Vec::new(), Vec::new(), Vec::new());
            for &(i, c, e1, e2) in &pairs {
                if i != cur_i {
                    cur_i = i;
                    tabs = (
                        monomial_table(&spec, e1, true),
                        monomial_table(&spec, eq1, true),
                        monomial_table(&spec, e2, true),
                    );
                }
                for b in 1..spec.size() {
                    per_tuple(sw, (i, c, e1, e2), b as Elt, &tabs);
                }
            }
        }
        EnumStrategy::Sampled { count, seed } => {
            if pairs.is_empty() {
                return Ok(());
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut cache: Vec<Option<(Vec<Elt>, Vec<Elt>, Vec<Elt>)>> = vec![None; m as usize];
            for _ in 0..*count {
                let pr = pairs[rng.gen_range(0..pairs.len())];
                let b = rng.gen_range(1..spec.size()) as Elt;
                let slot = &mut cache[pr.0 as usize];
                if slot.is_none() {
                    *slot = Some((
                        monomial_table(&spec, pr.2, true),
                        monomial_table(&spec, eq1, true),
                        monomial_table(&spec, pr.3, true),
                    ));
                }
                let tabs = cache[pr.0 as usize].as_ref().unwrap();
                per_tuple(sw, pr, b, tabs);
            }
        }
    }
    Ok(())
}

/// x(x^(2^i) + x^q + c x^(2^i q)) + x^(2^i)(c^q x^q + s x^(2^i q)) +
/// x^((2^i+1)q) over n = 2m, q = 2^m, gcd(i,m) = 1, s outside F_q, and
/// X^(2^i+1) + cX^(2^i) + c^q X + 1 irreducible over F_(2^n).
fn sweep_f4(sw: &mut Sweep, strategy: &EnumStrategy) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    if n % 2 != 0 {
        return Ok(());
    }
    let m = n / 2;
    let q = 1u64 << m;
    let mut i_list = Vec::new();
    for i in 1..m {
        if gcd(i as u64, m as u64) == 1 {
            i_list.push(i);
        }
    }
    // Valid c per i: the associated degree-(2^i+1) polynomial must be
    // irreducible over the big field. c ranges over all of F_(2^n); c = 0
    // fails (X^(2^i+1) + 1 has the root 1).
    let mut per_i: Vec<(u32, Vec<Elt>)> = Vec::new();
    for &i in &i_list {
        let deg = (1usize << i) + 1;
        let mut cs = Vec::new();
        for c in 0..spec.size() {
            let c = c as Elt;
            let mut coeffs = vec![0 as Elt; deg + 1];
            coeffs[0] = 1;
            coeffs[1] = spec.pow_u(c, q);
            coeffs[deg - 1] ^= c;
            coeffs[deg] ^= 1;
            if spec
                .irreducible_over_extension(&coeffs)
                .unwrap_or(false)
            {
                cs.push(c);
            }
        }
        per_i.push((i, cs));
    }
    let s_list: Vec<Elt> = spec
        .elements()
        .filter(|&s| !spec.in_subfield(m, s))
        .collect();
    let space: u128 = per_i
        .iter()
        .map(|(_, cs)| cs.len() as u128 * s_list.len() as u128)
        .sum();
    if matches!(strategy, EnumStrategy::Exhaustive) && space > EXHAUSTIVE_BUDGET as u128 {
        return Err(FamilyError::StrategyInfeasible {
            family: FamilyId::F4,
            n,
            tuples: space,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    let exps = |i: u32| -> [u32; 6] {
        let p2 = 1u64 << i;
        [
            reduce_exponent(&spec, p2 + 1),
            reduce_exponent(&spec, q + 1),
            reduce_exponent(&spec, p2 * q + 1),
            reduce_exponent(&spec, p2 + q),
            reduce_exponent(&spec, p2 * (q + 1)),
            reduce_exponent(&spec, (p2 + 1) * q),
        ]
    };
    let per_tuple = |sw: &mut Sweep, i: u32, c: Elt, s: Elt, e: &[u32; 6], t: &[Vec<Elt>; 6]| {
        let spec = sw.spec.clone();
        sw.stats.candidates += 1;
        let cq = spec.pow_u(c, q);
        let lut: Vec<u16> = (0..spec.size())
            .map(|x| {
                t[0][x]
                    ^ t[1][x]
                    ^ spec.mul(c, t[2][x])
                    ^ spec.mul(cq, t[3][x])
                    ^ spec.mul(s, t[4][x])
                    ^ t[5][x]
            })
            .collect();
        sw.offer(&lut, true, || {
            (
                named(&[("i", i as u64), ("c", c as u64), ("s", s as u64)]),
                SymbolicForm::Poly(poly_of(&[
                    (1, e[0]),
                    (1, e[1]),
                    (c, e[2]),
                    (cq, e[3]),
                    (s, e[4]),
                    (1, e[5]),
                ])),
            )
        });
    };
    match strategy {
        EnumStrategy::Exhaustive => {
            for (i, cs) in &per_i {
                let e = exps(*i);
                let t = [
                    monomial_table(&spec, e[0], true),
                    monomial_table(&spec, e[1], true),
                    monomial_table(&spec, e[2], true),
                    monomial_table(&spec, e[3], true),
                    monomial_table(&spec, e[4], true),
                    monomial_table(&spec, e[5], true),
                ];
                for &c in cs {
                    for &s in &s_list {
                        per_tuple(sw, *i, c, s, &e, &t);
                    }
                }
            }
        }
        EnumStrategy::Sampled { count, seed } => {
            let flat: Vec<(u32, Elt)> = per_i
                .iter()
                .flat_map(|(i, cs)| cs.iter().map(move |&c| (*i, c)))
                .collect();
            if flat.is_empty() || s_list.is_empty() {
                return Ok(());
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut cache: Vec<Option<([u32; 6], [Vec<Elt>; 6])>> = vec![None; m as usize];
            for _ in 0..*count {
                let (i, c) = flat[rng.gen_range(0..flat.len())];
                let s = s_list[rng.gen_range(0..s_list.len())];
                if cache[i as usize].is_none() {
                    let e = exps(i);
                    let t = [
                        monomial_table(&spec, e[0], true),
                        monomial_table(&spec, e[1], true),
                        monomial_table(&spec, e[2], true),
                        monomial_table(&spec, e[3], true),
                        monomial_table(&spec, e[4], true),
                        monomial_table(&spec, e[5], true),
                    ];
                    cache[i as usize] = Some((e, t));
                }
                let (e, t) = cache[i as usize].as_ref().unwrap();
                per_tuple(sw, i, c, s, e, t);
            }
        }
    }
    Ok(())
}

/// The three trace families over a single parameter a != 0:
/// x^3 + a^-1 tr_1^n(a^3 x^9), and for 3 | n the two variants
/// x^3 + a^-1 tr_3^n(a^3 x^9 + a^6 x^18) and
/// x^3 + a^-1 tr_3^n(a^6 x^18 + a^12 x^36).
fn sweep_trace_family(
    sw: &mut Sweep,
    family: FamilyId,
    strategy: &EnumStrategy,
) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    let (sub, inner_shape): (u32, &[(u64, u32)]) = match family {
        FamilyId::F5 => (1, &[(3, 9)]),
        FamilyId::F6 => (3, &[(3, 9), (6, 18)]),
        FamilyId::F7 => (3, &[(6, 18), (12, 36)]),
        _ => unreachable!(),
    };
    if n % sub != 0 || n == sub {
        return Ok(());
    }
    // Inner exponents can fold at small n (x^36 at n = 6 is x^36 still;
    // at n = 4 the family is skipped by the subfield requirement or folds
    // harmlessly): reduce and keep quadratic.
    let shape: Vec<(u64, u32)> = inner_shape
        .iter()
        .map(|&(ap, e)| (ap, reduce_exponent(&spec, e as u64)))
        .collect();
    let tabs: Vec<Vec<Elt>> = shape
        .iter()
        .map(|&(_, e)| monomial_table(&spec, e, true))
        .collect();
    let t3 = monomial_table(&spec, 3, true);
    // tr_sub^n as a value table over the whole field.
    let tr_tab: Vec<Elt> = (0..spec.size())
        .map(|v| spec.trace(sub, v as Elt).expect("sub divides n"))
        .collect();
    let a_range: Vec<Elt> = match strategy {
        EnumStrategy::Exhaustive => (1..spec.size()).map(|a| a as Elt).collect(),
        EnumStrategy::Sampled { count, seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            (0..*count)
                .map(|_| rng.gen_range(1..spec.size()) as Elt)
                .collect()
        }
    };
    for a in a_range {
        sw.stats.candidates += 1;
        let ainv = spec.inv(a).expect("a nonzero");
        let coeffs: Vec<Elt> = shape.iter().map(|&(ap, _)| spec.pow_u(a, ap)).collect();
        let lut: Vec<u16> = (0..spec.size())
            .map(|x| {
                let mut v: Elt = 0;
                for (c, t) in coeffs.iter().zip(&tabs) {
                    v ^= spec.mul(*c, t[x]);
                }
                t3[x] ^ spec.mul(ainv, tr_tab[v as usize])
            })
            .collect();
        sw.offer(&lut, true, || {
            let inner: Vec<(Elt, u32)> = coeffs
                .iter()
                .zip(&shape)
                .map(|(&c, &(_, e))| (c, e))
                .collect();
            (
                named(&[("a", a as u64)]),
                SymbolicForm::TraceExpr {
                    outer: poly_of(&[(1, 3)]),
                    pre: ainv,
                    sub,
                    inner: poly_of(&inner),
                },
            )
        });
    }
    Ok(())
}

/// u x^(2^s+1) + u^(2^k) x^(2^(n-k)+2^(k+s)) + v x^(2^(n-k)+1) +
/// w u^(2^k+1) x^(2^s+2^(k+s)) over n = 3k, gcd(k,3) = gcd(s,3k) = 1,
/// 3 | (k+s), u primitive, v,w in F_(2^k) with vw != 1. The exponent
/// 2^(n-k) is the inverse of 2^k modulo 2^n - 1.
fn sweep_f8_10(sw: &mut Sweep, strategy: &EnumStrategy) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    if n % 3 != 0 {
        return Ok(());
    }
    let k = n / 3;
    if gcd(k as u64, 3) != 1 {
        return Ok(());
    }
    let s_list: Vec<u32> = (1..=n)
        .filter(|&s| gcd(s as u64, n as u64) == 1 && (k + s) % 3 == 0)
        .collect();
    let u_list: Vec<Elt> = spec
        .elements()
        .filter(|&u| spec.is_primitive(u).unwrap_or(false))
        .collect();
    let vw_list = spec.subfield(k).expect("k divides n");
    let space = s_list.len() as u128
        * u_list.len() as u128
        * vw_list.len() as u128
        * vw_list.len() as u128;
    if matches!(strategy, EnumStrategy::Exhaustive) && space > EXHAUSTIVE_BUDGET as u128 {
        return Err(FamilyError::StrategyInfeasible {
            family: FamilyId::F8_10,
            n,
            tuples: space,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    let exps = |s: u32| -> [u32; 4] {
        [
            reduce_exponent(&spec, (1u64 << s) + 1),
            reduce_exponent(&spec, (1u64 << (n - k)) + (1u64 << (k + s))),
            reduce_exponent(&spec, (1u64 << (n - k)) + 1),
            reduce_exponent(&spec, (1u64 << s) + (1u64 << (k + s))),
        ]
    };
    let per_tuple = |sw: &mut Sweep, s: u32, u: Elt, v: Elt, w: Elt, e: &[u32; 4], t: &[Vec<Elt>; 4]| {
        let spec = sw.spec.clone();
        sw.stats.candidates += 1;
        if spec.mul(v, w) == 1 {
            return;
        }
        let u2k = spec.pow_u(u, 1u64 << k);
        let wu = spec.mul(w, spec.mul(u2k, u));
        let lut: Vec<u16> = (0..spec.size())
            .map(|x| {
                spec.mul(u, t[0][x])
                    ^ spec.mul(u2k, t[1][x])
                    ^ spec.mul(v, t[2][x])
                    ^ spec.mul(wu, t[3][x])
            })
            .collect();
        sw.offer(&lut, true, || {
            (
                named(&[
                    ("s", s as u64),
                    ("u", u as u64),
                    ("v", v as u64),
                    ("w", w as u64),
                ]),
                SymbolicForm::Poly(poly_of(&[(u, e[0]), (u2k, e[1]), (v, e[2]), (wu, e[3])])),
            )
        });
    };
    match strategy {
        EnumStrategy::Exhaustive => {
            for &s in &s_list {
                let e = exps(s);
                let t = [
                    monomial_table(&spec, e[0], true),
                    monomial_table(&spec, e[1], true),
                    monomial_table(&spec, e[2], true),
                    monomial_table(&spec, e[3], true),
                ];
                for &u in &u_list {
                    for &v in &vw_list {
                        for &w in &vw_list {
                            per_tuple(sw, s, u, v, w, &e, &t);
                        }
                    }
                }
            }
        }
        EnumStrategy::Sampled { count, seed } => {
            if s_list.is_empty() || u_list.is_empty() {
                return Ok(());
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            for _ in 0..*count {
                let s = s_list[rng.gen_range(0..s_list.len())];
                let u = u_list[rng.gen_range(0..u_list.len())];
                let v = vw_list[rng.gen_range(0..vw_list.len())];
                let w = vw_list[rng.gen_range(0..vw_list.len())];
                let e = exps(s);
                let t = [
                    monomial_table(&spec, e[0], true),
                    monomial_table(&spec, e[1], true),
                    monomial_table(&spec, e[2], true),
                    monomial_table(&spec, e[3], true),
                ];
                per_tuple(sw, s, u, v, w, &e, &t);
            }
        }
    }
    Ok(())
}

/// alpha x^(2^s+1) + alpha^(2^k) x^(2^(k+s)+2^k) + beta x^(2^k+1) +
/// sum_i gamma_i x^(2^(k+i)+2^i) over n = 2k with k odd, s odd,
/// gcd(s,k) = 1, alpha a non-cube, beta outside F_(2^k), gamma_i in
/// F_(2^k). A sampled sweep walks the whole gamma = 0 slice first, then
/// draws random tuples.
fn sweep_f11(sw: &mut Sweep, strategy: &EnumStrategy) -> Result<(), FamilyError> {
    let spec = sw.spec.clone();
    let n = spec.n();
    if n % 2 != 0 {
        return Ok(());
    }
    let k = n / 2;
    if k % 2 == 0 {
        return Ok(());
    }
    let s_list: Vec<u32> = (1..=n)
        .filter(|&s| s % 2 == 1 && gcd(s as u64, k as u64) == 1)
        .collect();
    let alphas: Vec<Elt> = spec.elements().filter(|&a| !spec.is_cube(a)).collect();
    let sub = spec.subfield(k).expect("k divides n");
    let betas: Vec<Elt> = {
        let in_sub: HashSet<Elt> = sub.iter().copied().collect();
        spec.elements().filter(|e| !in_sub.contains(e)).collect()
    };
    let g = k as usize - 1;
    let space = s_list.len() as u128
        * alphas.len() as u128
        * betas.len() as u128
        * (sub.len() as u128).pow(g as u32);
    if matches!(strategy, EnumStrategy::Exhaustive) && space > EXHAUSTIVE_BUDGET as u128 {
        return Err(FamilyError::StrategyInfeasible {
            family: FamilyId::F11,
            n,
            tuples: space,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    struct STabs {
        e1: u32,
        e2: u32,
        e3: u32,
        eg: Vec<u32>,
        t1: Vec<Elt>,
        t2: Vec<Elt>,
        t3: Vec<Elt>,
        tg: Vec<Vec<Elt>>,
    }
    let build = |s: u32| -> STabs {
        let e1 = reduce_exponent(&spec, (1u64 << s) + 1);
        let e2 = reduce_exponent(&spec, (1u64 << ((k + s) % n)) + (1u64 << k));
        let e3 = reduce_exponent(&spec, (1u64 << k) + 1);
        let eg: Vec<u32> = (1..k)
            .map(|i| reduce_exponent(&spec, (1u64 << (k + i)) + (1u64 << i)))
            .collect();
        STabs {
            e1,
            e2,
            e3,
            eg: eg.clone(),
            t1: monomial_table(&spec, e1, true),
            t2: monomial_table(&spec, e2, true),
            t3: monomial_table(&spec, e3, true),
            tg: eg.iter().map(|&e| monomial_table(&spec, e, true)).collect(),
        }
    };
    let per_tuple = |sw: &mut Sweep, s: u32, alpha: Elt, beta: Elt, gam: &[Elt], st: &STabs| {
        let spec = sw.spec.clone();
        sw.stats.candidates += 1;
        let a2k = spec.pow_u(alpha, 1u64 << k);
        let lut: Vec<u16> = (0..spec.size())
            .map(|x| {
                let mut v =
                    spec.mul(alpha, st.t1[x]) ^ spec.mul(a2k, st.t2[x]) ^ spec.mul(beta, st.t3[x]);
                for (gi, tg) in gam.iter().zip(&st.tg) {
                    if *gi != 0 {
                        v ^= spec.mul(*gi, tg[x]);
                    }
                }
                v
            })
            .collect();
        sw.offer(&lut, true, || {
            let mut params = vec![
                ("s".to_string(), s as u64),
                ("alpha".to_string(), alpha as u64),
                ("beta".to_string(), beta as u64),
            ];
            let mut terms = vec![(alpha, st.e1), (a2k, st.e2), (beta, st.e3)];
            for (j, (&gi, &e)) in gam.iter().zip(&st.eg).enumerate() {
                params.push((format!("gamma{}", j + 1), gi as u64));
                if gi != 0 {
                    terms.push((gi, e));
                }
            }
            (params, SymbolicForm::Poly(poly_of(&terms)))
        });
    };
    match strategy {
        EnumStrategy::Exhaustive => {
            let mut gam = vec![0 as Elt; g];
            for &s in &s_list {
                let st = build(s);
                for &alpha in &alphas {
                    for &beta in &betas {
                        // Odometer over the gamma tuple in subfield
                        // encoding order; wrap-around to all zeros ends it.
                        let mut idx = vec![0usize; g];
                        loop {
                            for (slot, &j) in gam.iter_mut().zip(idx.iter()) {
                                *slot = sub[j];
                            }
                            per_tuple(sw, s, alpha, beta, &gam, &st);
                            let mut pos = g;
                            while pos > 0 {
                                pos -= 1;
                                idx[pos] += 1;
                                if idx[pos] < sub.len() {
                                    break;
                                }
                                idx[pos] = 0;
                            }
                            if idx.iter().all(|&j| j == 0) {
                                break;
                            }
                        }
                    }
                }
            }
        }
        EnumStrategy::Sampled { count, seed } => {
            if s_list.is_empty() || alphas.is_empty() || betas.is_empty() {
                return Ok(());
            }
            // Full gamma = 0 slice first: it is where the structurally
            // distinct behaviour lives and it keeps sampled sweeps a
            // superset of the most informative subspace.
            let zeros = vec![0 as Elt; g];
            for &s in &s_list {
                let st = build(s);
                for &alpha in &alphas {
                    for &beta in &betas {
                        per_tuple(sw, s, alpha, beta, &zeros, &st);
                    }
                }
            }
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let tabs: Vec<STabs> = s_list.iter().map(|&s| build(s)).collect();
            let mut gam = vec![0 as Elt; g];
            for _ in 0..*count {
                let si = rng.gen_range(0..s_list.len());
                let alpha = alphas[rng.gen_range(0..alphas.len())];
                let beta = betas[rng.gen_range(0..betas.len())];
                for slot in gam.iter_mut() {
                    *slot = sub[rng.gen_range(0..sub.len())];
                }
                per_tuple(sw, s_list[si], alpha, beta, &gam, &tabs[si]);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Public sweep API
// ---------------------------------------------------------------------------

/// Sweep one family over one field, streaming every verified instance to
/// `sink`. Deterministic for a fixed (family, spec, strategy): tuples are
/// visited in encoding order, and sampled draws come from a seeded
/// generator.
pub fn enumerate_with(
    spec: &FieldSpec,
    family: FamilyId,
    strategy: &EnumStrategy,
    sink: &mut dyn FnMut(FamilyInstance),
) -> Result<EnumStats, FamilyError> {
    let mut sw = Sweep::new(spec, family, sink);
    match family {
        FamilyId::Gold
        | FamilyId::Kasami
        | FamilyId::Welch
        | FamilyId::Niho
        | FamilyId::Inverse
        | FamilyId::Dobbertin => sweep_power(&mut sw, family, strategy),
        FamilyId::F1_2 => sweep_f1_2(&mut sw, strategy)?,
        FamilyId::F3 => sweep_f3(&mut sw, strategy)?,
        FamilyId::F4 => sweep_f4(&mut sw, strategy)?,
        FamilyId::F5 | FamilyId::F6 | FamilyId::F7 => sweep_trace_family(&mut sw, family, strategy)?,
        FamilyId::F8_10 => sweep_f8_10(&mut sw, strategy)?,
        FamilyId::F11 => sweep_f11(&mut sw, strategy)?,
    }
    Ok(sw.stats)
}

/// As [`enumerate_with`], collecting the instances.
pub fn enumerate(
    spec: &FieldSpec,
    family: FamilyId,
    strategy: &EnumStrategy,
) -> Result<Enumeration, FamilyError> {
    let mut instances = Vec::new();
    let stats = enumerate_with(spec, family, strategy, &mut |inst| instances.push(inst))?;
    Ok(Enumeration { instances, stats })
}

/// Check one named parameter tuple against every side condition of its
/// family, reporting the first violated condition by name.
pub fn validate_conditions(
    spec: &FieldSpec,
    family: FamilyId,
    params: &[(&str, u64)],
) -> Result<(), FamilyError> {
    let viol = |s: &str| Err(FamilyError::ConditionViolated(s.to_string()));
    let get = |name: &str| -> Result<u64, FamilyError> {
        params
            .iter()
            .find(|(k, _)| *k == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| FamilyError::ConditionViolated(format!("missing parameter {name}")))
    };
    let elt = |name: &str| -> Result<Elt, FamilyError> {
        let v = get(name)?;
        if v >= spec.size() as u64 {
            return Err(FamilyError::ConditionViolated(format!(
                "{name} is not a field element"
            )));
        }
        Ok(v as Elt)
    };
    let n = spec.n();
    match family {
        FamilyId::Gold | FamilyId::Kasami => {
            power_exponent(family, n, Some(get("i")? as u32)).map(|_| ())
        }
        FamilyId::Welch | FamilyId::Niho | FamilyId::Inverse | FamilyId::Dobbertin => {
            power_exponent(family, n, None).map(|_| ())
        }
        FamilyId::F1_2 => {
            if n < 12 {
                return viol("n >= 12");
            }
            let p = get("p")?;
            if p != 3 && p != 4 {
                return viol("p in {3, 4}");
            }
            if n as u64 % p != 0 {
                return viol("n = pk");
            }
            let k = n as u64 / p;
            if gcd(k, p) != 1 {
                return viol("gcd(k, p) = 1");
            }
            let s = get("s")?;
            if s == 0 || gcd(s, n as u64) != 1 {
                return viol("gcd(s, pk) = 1");
            }
            let alpha = elt("alpha")?;
            if !spec.is_primitive(alpha).unwrap_or(false) {
                return viol("alpha primitive");
            }
            Ok(())
        }
        FamilyId::F3 => {
            if n % 2 != 0 {
                return viol("n = 2m");
            }
            let m = n / 2;
            let q = 1u64 << m;
            let i = get("i")?;
            if i == 0 || i >= m as u64 || gcd(i, m as u64) != 1 {
                return viol("gcd(i, m) = 1");
            }
            if gcd((1u64 << i) + 1, q + 1) == 1 {
                return viol("gcd(2^i + 1, q + 1) != 1");
            }
            let c = elt("c")?;
            if c == 0 || spec.pow_u(c, q + 1) != 1 {
                return viol("c^(q+1) = 1");
            }
            let excl_ord = spec.order() / gcd(((1u64 << i) + 1) * (q - 1), spec.order());
            if spec.pow_u(c, excl_ord) == 1 {
                return viol("c outside the (2^i+1)(q-1)-th power subgroup");
            }
            let b = elt("b")?;
            if b == 0 {
                return viol("b nonzero");
            }
            if spec.mul(c, spec.pow_u(b, q)) ^ b == 0 {
                return viol("c b^q + b != 0");
            }
            Ok(())
        }
        FamilyId::F4 => {
            if n % 2 != 0 {
                return viol("n = 2m");
            }
            let m = n / 2;
            let q = 1u64 << m;
            let i = get("i")?;
            if i == 0 || i >= m as u64 || gcd(i, m as u64) != 1 {
                return viol("gcd(i, m) = 1");
            }
            let c = elt("c")?;
            let deg = (1usize << i) + 1;
            let mut coeffs = vec![0 as Elt; deg + 1];
            coeffs[0] = 1;
            coeffs[1] = spec.pow_u(c, q);
            coeffs[deg - 1] ^= c;
            coeffs[deg] ^= 1;
            if !spec.irreducible_over_extension(&coeffs).unwrap_or(false) {
                return viol("X^(2^i+1) + cX^(2^i) + c^q X + 1 irreducible");
            }
            let s = elt("s")?;
            if spec.in_subfield(m, s) {
                return viol("s outside F_q");
            }
            Ok(())
        }
        FamilyId::F5 | FamilyId::F6 | FamilyId::F7 => {
            if family != FamilyId::F5 {
                if n % 3 != 0 {
                    return viol("3 | n");
                }
                if n == 3 {
                    return viol("n > 3");
                }
            }
            let a = elt("a")?;
            if a == 0 {
                return viol("a nonzero");
            }
            Ok(())
        }
        FamilyId::F8_10 => {
            if n % 3 != 0 {
                return viol("n = 3k");
            }
            let k = n / 3;
            if gcd(k as u64, 3) != 1 {
                return viol("gcd(k, 3) = 1");
            }
            let s = get("s")?;
            if s == 0 || gcd(s, n as u64) != 1 {
                return viol("gcd(s, 3k) = 1");
            }
            if (k as u64 + s) % 3 != 0 {
                return viol("3 | (k + s)");
            }
            let u = elt("u")?;
            if !spec.is_primitive(u).unwrap_or(false) {
                return viol("u primitive");
            }
            let v = elt("v")?;
            let w = elt("w")?;
            if !spec.in_subfield(k, v) || !spec.in_subfield(k, w) {
                return viol("v, w in F_(2^k)");
            }
            if spec.mul(v, w) == 1 {
                return viol("vw != 1");
            }
            Ok(())
        }
        FamilyId::F11 => {
            if n % 2 != 0 {
                return viol("n = 2k");
            }
            let k = n / 2;
            if k % 2 == 0 {
                return viol("k odd");
            }
            let s = get("s")?;
            if s % 2 == 0 {
                return viol("s odd");
            }
            if gcd(s, k as u64) != 1 {
                return viol("gcd(s, k) = 1");
            }
            let alpha = elt("alpha")?;
            if spec.is_cube(alpha) {
                return viol("alpha not a cube");
            }
            let beta = elt("beta")?;
            if spec.in_subfield(k, beta) {
                return viol("beta outside F_(2^k)");
            }
            for j in 1..k {
                let g = elt(&format!("gamma{j}"))?;
                if !spec.in_subfield(k, g) {
                    return viol("gamma_i in F_(2^k)");
                }
            }
            Ok(())
        }
    }
}
