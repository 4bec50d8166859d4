//! CCZ-equivalence decisions: exact cyclotomic arithmetic for power pairs,
//! invariant-based separation, and a complete bounded witness search for
//! quadratic pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    invariant_bundle, is_apn, ortho_derivative, AnalysisError, BundleOptions, InvariantBundle,
};
use crate::field::{Elt, FieldSpec};
use crate::vbf::{AffineMap, LinearMap, Vbf};

#[derive(Debug, Error)]
pub enum EquivError {
    #[error("functions live over different dimensions: {0} vs {1}")]
    MismatchedDimension(u32, u32),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// g(x) = l1(f(l2(x))) + a(x), with l1 and l2 invertible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaTriple {
    pub l1: AffineMap,
    pub l2: AffineMap,
    pub a: AffineMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    /// Extended-affine witness: g = l1 o f o l2 + a.
    Ea(EaTriple),
    /// g(x) = f^{-1}(x)^{2^frob} for bijective f: the graph-swap relation
    /// between a power function and its compositional inverse.
    GraphInverse { frob: u32 },
}

impl Witness {
    /// Replay the witness against the actual value tables.
    pub fn verify(&self, f: &Vbf, g: &Vbf) -> bool {
        if f.n() != g.n() {
            return false;
        }
        match self {
            Witness::Ea(t) => match f.apply_ea(&t.l1, &t.l2, &t.a) {
                Ok(h) => h.lut() == g.lut(),
                Err(_) => false,
            },
            Witness::GraphInverse { frob } => {
                let spec = f.spec();
                let size = spec.size();
                let mut inv = vec![u16::MAX; size];
                for x in 0..size {
                    let y = f.lut()[x] as usize;
                    if inv[y] != u16::MAX {
                        return false;
                    }
                    inv[y] = x as u16;
                }
                (0..size).all(|x| g.lut()[x] == spec.pow_u(inv[x], 1u64 << frob))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separator {
    /// A CCZ-invariant whose values differ; the payload names it.
    DistinctInvariant(String),
    /// Power exponents lie in disjoint cyclotomic classes, with no inverse
    /// relation between them.
    CyclotomicClassesDisjoint,
    /// A quadratic function cannot be CCZ-equivalent to a non-quadratic
    /// power function: equivalence to a power forces EA-equivalence, and EA
    /// preserves algebraic degree.
    QuadraticVersusNonquadraticPower,
    /// A complete search space was exhausted without finding a witness.
    SearchExhausted,
}

impl std::fmt::Display for Separator {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Separator::DistinctInvariant(name) => write!(out, "distinct {name}"),
            Separator::CyclotomicClassesDisjoint => write!(out, "cyclotomic-classes-disjoint"),
            Separator::QuadraticVersusNonquadraticPower => {
                write!(out, "quadratic-vs-nonquadratic-power")
            }
            Separator::SearchExhausted => write!(out, "search-exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Equivalent(Witness),
    Inequivalent(Separator),
    Undecided { budget_spent: u64 },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent(_))
    }

    pub fn is_inequivalent(&self) -> bool {
        matches!(self, Verdict::Inequivalent(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Equivalent(w) => Some(w),
            _ => None,
        }
    }
}

/// Search budget in nodes for a given dimension.
pub const fn default_budget(n: u32) -> u64 {
    if n <= 8 {
        10_000_000
    } else {
        1_000_000
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Fold an exponent into 1..=2^n-1 preserving x^e on the multiplicative
/// group; e = 0 stays 0.
fn fold_exp(e: u64, ord: u64) -> u64 {
    if e == 0 {
        return 0;
    }
    let r = e % ord;
    if r == 0 {
        ord
    } else {
        r
    }
}

/// Orbit of d under doubling mod 2^n - 1, sorted ascending. The exponent
/// 2^n - 1 is its own orbit under the 1..=2^n-1 convention.
pub fn cyclo_class(d: u64, n: u32) -> Vec<u64> {
    let ord = (1u64 << n) - 1;
    let start = fold_exp(d, ord);
    assert!(start >= 1, "exponent must be at least 1");
    let mut out = Vec::with_capacity(n as usize);
    let mut x = start;
    loop {
        out.push(x);
        x = fold_exp(x * 2, ord);
        if x == start {
            break;
        }
    }
    out.sort_unstable();
    out
}

/// Minimum of the doubling orbit: the canonical class representative.
pub fn cyclo_canonical(d: u64, n: u32) -> u64 {
    cyclo_class(d, n)[0]
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i64, m as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i64) as u64)
}

/// Exact CCZ decision for two power functions x^d1 and x^d2: equivalent iff
/// d2 lies in the doubling orbit of d1 or of d1^{-1} mod 2^n - 1 (the graph
/// swap of a bijective power is again a power).
pub fn power_power_decide(spec: &FieldSpec, d1: u64, d2: u64) -> Result<Verdict, EquivError> {
    let n = spec.n();
    let ord = spec.order();
    let d1 = fold_exp(d1, ord);
    let d2 = fold_exp(d2, ord);
    for d in [d1, d2] {
        if d == 0 {
            return Err(EquivError::PreconditionViolated("exponent must be nonzero".into()));
        }
        let f = Vbf::power(spec, d as u32)
            .map_err(|e| EquivError::PreconditionViolated(e.to_string()))?;
        if !is_apn(&f) {
            return Err(EquivError::Analysis(AnalysisError::NotApn));
        }
    }
    if let Some(j) = (0..n).find(|&j| fold_exp(d1 << j, ord) == d2) {
        let w = Witness::Ea(EaTriple {
            l1: AffineMap::new(LinearMap::frobenius(spec, j), 0),
            l2: AffineMap::identity(n),
            a: AffineMap::zero(n),
        });
        return Ok(Verdict::Equivalent(w));
    }
    if gcd(d1, ord) == 1 {
        let inv = mod_inverse(d1, ord).expect("coprime exponent has an inverse");
        if let Some(j) = (0..n).find(|&j| fold_exp(inv << j, ord) == d2) {
            return Ok(Verdict::Equivalent(Witness::GraphInverse { frob: j }));
        }
    }
    Ok(Verdict::Inequivalent(Separator::CyclotomicClassesDisjoint))
}

/// Invariants used to separate functions before any search, plus the two
/// flags that steer the decision ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantProfile {
    pub bundle: InvariantBundle,
    /// Canonical cyclotomic representative when the function is a plain
    /// monomial. Routing metadata only: a polynomial can be equivalent to a
    /// power, so this never separates by itself.
    pub power_exponent: Option<u64>,
    pub quadratic: bool,
}

pub fn invariant_profile(f: &Vbf, opts: &BundleOptions) -> Result<InvariantProfile, EquivError> {
    if !is_apn(f) {
        return Err(EquivError::Analysis(AnalysisError::NotApn));
    }
    let bundle = invariant_bundle(f, opts);
    let quadratic = bundle.degree == 2;
    let power_exponent = plain_power_exponent(f).map(|d| cyclo_canonical(d, f.n()));
    Ok(InvariantProfile { bundle, power_exponent, quadratic })
}

/// Name of the first genuinely CCZ-invariant component that differs, if
/// any. Degree and the power flag are deliberately not compared: neither is
/// preserved by CCZ-equivalence in general.
pub fn profile_separator(a: &InvariantProfile, b: &InvariantProfile) -> Option<&'static str> {
    if a.bundle.diff_spectrum != b.bundle.diff_spectrum {
        return Some("differential-spectrum");
    }
    if a.bundle.extended_walsh != b.bundle.extended_walsh {
        return Some("extended-walsh-spectrum");
    }
    if let (Some(x), Some(y)) = (a.bundle.gamma_rank, b.bundle.gamma_rank) {
        if x != y {
            return Some("gamma-rank");
        }
    }
    if let (Some(x), Some(y)) = (a.bundle.delta_rank, b.bundle.delta_rank) {
        if x != y {
            return Some("delta-rank");
        }
    }
    if a.quadratic && b.quadratic {
        // CCZ coincides with EA for quadratic APN functions, so the
        // EA-invariant ortho-derivative spectra separate within this case.
        if a.bundle.ortho_diff_spectrum != b.bundle.ortho_diff_spectrum {
            return Some("ortho-derivative-differential-spectrum");
        }
        if a.bundle.ortho_extended_walsh != b.bundle.ortho_extended_walsh {
            return Some("ortho-derivative-walsh-spectrum");
        }
    }
    None
}

fn plain_power_exponent(f: &Vbf) -> Option<u64> {
    let d = f.provenance().and_then(|p| p.as_plain_power())?;
    Some(fold_exp(d as u64, f.spec().order()))
}

// ---------------------------------------------------------------------------
// Witness search for quadratic pairs.
//
// For quadratic F the second derivative B_F(u,v) = F(u+v)+F(u)+F(v)+F(0) is
// symmetric bilinear, and g = l1 o f o l2 + a with linear parts L1, L2 forces
// B_G(u,v) = L1(B_F(L2 u, L2 v)). The ortho-derivative transforms covariantly
// as pi_G = M1 o pi_F o L2 for the invertible M1 = (L1*)^{-1}, so candidate
// L2 maps are pruned by maintaining both linear systems incrementally while
// assigning L2 column by column (or point by point).
// ---------------------------------------------------------------------------

/// One prepared side of a quadratic search: the function, its
/// ortho-derivative, and stable point labels refined from the
/// ortho-derivative's fiber structure.
pub struct QuadSide {
    f: Vbf,
    pi: Vec<Elt>,
    labels: Vec<u64>,
    hist: Vec<(u64, u32)>,
    by_label: BTreeMap<u64, Vec<Elt>>,
    bijective: bool,
    power: Option<u64>,
}

impl QuadSide {
    pub fn prepare(f: &Vbf) -> Result<QuadSide, EquivError> {
        let pi_f = ortho_derivative(f)?;
        let pi: Vec<Elt> = pi_f.lut().to_vec();
        let labels = refine_labels(&pi);
        let mut by_label: BTreeMap<u64, Vec<Elt>> = BTreeMap::new();
        for (x, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(x as Elt);
        }
        let hist: Vec<(u64, u32)> = by_label.iter().map(|(&l, v)| (l, v.len() as u32)).collect();
        let mut seen = vec![false; pi.len()];
        let mut bijective = true;
        for &v in &pi[1..] {
            if v == 0 || seen[v as usize] {
                bijective = false;
                break;
            }
            seen[v as usize] = true;
        }
        Ok(QuadSide {
            f: f.clone(),
            power: plain_power_exponent(f),
            pi,
            labels,
            hist,
            by_label,
            bijective,
        })
    }

    pub fn function(&self) -> &Vbf {
        &self.f
    }

    /// Multiset of refined label classes as (label, size), sorted by label.
    /// Equal histograms are a necessary condition for EA-equivalence.
    pub fn label_histogram(&self) -> &[(u64, u32)] {
        &self.hist
    }

    pub fn ortho_bijective(&self) -> bool {
        self.bijective
    }
}

fn mix(h: u64, v: u64) -> u64 {
    let mut x = h ^ v.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn distinct_count(v: &[u64]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// For each direction x, the value-multiplicity profile of the derivative
/// z -> pi(z + x) + pi(z), hashed. Composing pi with linear bijections on
/// either side permutes directions by the inner map and relabels values by
/// the outer one, so this profile transforms exactly like a point label on
/// the inner side.
fn derivative_profiles(pi: &[Elt]) -> Vec<u64> {
    let size = pi.len();
    let mut out = vec![0u64; size];
    let mut counts = vec![0u32; size];
    let mut touched: Vec<u16> = Vec::with_capacity(size);
    for x in 1..size {
        for z in 0..size {
            let v = pi[z ^ x] ^ pi[z];
            if counts[v as usize] == 0 {
                touched.push(v);
            }
            counts[v as usize] += 1;
        }
        let mut prof: Vec<u32> = touched.iter().map(|&v| counts[v as usize]).collect();
        prof.sort_unstable();
        out[x] = prof.iter().fold(0x4528_21e6_38d0_1377, |acc, &c| mix(acc, c as u64));
        for &v in &touched {
            counts[v as usize] = 0;
        }
        touched.clear();
    }
    out
}

/// Point labels invariant under the covariant transformation of the
/// ortho-derivative: seeded with fiber sizes and derivative profiles,
/// refined by the label multiset of fiber mates and by the mates' XOR
/// relations, to a fixed point.
fn refine_labels(pi: &[Elt]) -> Vec<u64> {
    let size = pi.len();
    let mut fiber: Vec<Vec<u16>> = vec![Vec::new(); size];
    for (x, &v) in pi.iter().enumerate() {
        fiber[v as usize].push(x as u16);
    }
    let dprof = derivative_profiles(pi);
    let mut lab: Vec<u64> = (0..size)
        .map(|x| {
            let h = mix(0x243f_6a88_85a3_08d3, (x == 0) as u64);
            let h = mix(h, (pi[x] == 0) as u64);
            let h = mix(h, dprof[x]);
            mix(h, fiber[pi[x] as usize].len() as u64)
        })
        .collect();
    let mut distinct = distinct_count(&lab);
    for _ in 0..pi.len().trailing_zeros() + 2 {
        let mut vhash = vec![0u64; size];
        for v in 0..size {
            if fiber[v].is_empty() {
                continue;
            }
            let mut ms: Vec<u64> = fiber[v].iter().map(|&x| lab[x as usize]).collect();
            ms.sort_unstable();
            vhash[v] = ms.iter().fold(0x1319_8a2e_0370_7344, |acc, &h| mix(acc, h));
        }
        let next: Vec<u64> = (0..size)
            .map(|x| {
                let v = pi[x] as usize;
                let mut h = mix(lab[x], vhash[v]);
                let mut mates: Vec<u64> = fiber[v]
                    .iter()
                    .filter(|&&m| m as usize != x)
                    .map(|&m| lab[(x as u16 ^ m) as usize])
                    .collect();
                mates.sort_unstable();
                for m in mates {
                    h = mix(h, m);
                }
                h
            })
            .collect();
        let nd = distinct_count(&next);
        lab = next;
        if nd == distinct {
            break;
        }
        distinct = nd;
    }
    lab
}

/// Incremental GF(2) system M(u_i) = w_i with consistency and injectivity
/// enforced on every insert. On a failed insert the state is poisoned; the
/// caller restores a snapshot.
#[derive(Clone, Default)]
struct PairSolve {
    u: [Elt; 16],
    w: [Elt; 16],
    img: [Elt; 16],
}

impl PairSolve {
    fn insert(&mut self, mut u: Elt, mut w: Elt) -> bool {
        loop {
            if u == 0 {
                return w == 0;
            }
            let b = (15 - u.leading_zeros()) as usize;
            if self.u[b] == 0 {
                self.u[b] = u;
                self.w[b] = w;
                // images of independent inputs must stay independent
                let mut t = w;
                loop {
                    if t == 0 {
                        return false;
                    }
                    let c = (15 - t.leading_zeros()) as usize;
                    if self.img[c] == 0 {
                        self.img[c] = t;
                        return true;
                    }
                    t ^= self.img[c];
                }
            }
            u ^= self.u[b];
            w ^= self.w[b];
        }
    }

    fn image(&self, mut u: Elt) -> Option<Elt> {
        let mut w = 0;
        loop {
            if u == 0 {
                return Some(w);
            }
            let b = (15 - u.leading_zeros()) as usize;
            if self.u[b] == 0 {
                return None;
            }
            u ^= self.u[b];
            w ^= self.w[b];
        }
    }

    /// Extend the recorded pairs to an invertible map on all of GF(2)^n by
    /// pairing leftover input dimensions with leftover output dimensions.
    fn complete(&self, n: u32) -> Option<LinearMap> {
        let mut s = self.clone();
        for b in 0..n {
            let e: Elt = 1 << b;
            if s.image(e).is_some() {
                continue;
            }
            let free = (0..n).map(|c| 1u16 << c).find(|&w| {
                let mut t = w;
                for k in (0..16).rev() {
                    if t >> k & 1 == 1 && s.img[k] != 0 {
                        t ^= s.img[k];
                    }
                }
                t != 0
            })?;
            if !s.insert(e, free) {
                return None;
            }
        }
        let cols: Vec<Elt> = (0..n).map(|b| s.image(1 << b).unwrap()).collect();
        Some(LinearMap::new(n, cols))
    }
}

#[inline]
fn bform(lut: &[u16], u: Elt, v: Elt) -> Elt {
    lut[(u ^ v) as usize] ^ lut[u as usize] ^ lut[v as usize] ^ lut[0]
}

enum Outcome {
    Found(Witness),
    Exhausted,
    OverBudget,
}

/// Given a complete candidate L2, solve for L1 on the span of the bilinear
/// values, complete it to an invertible map, and accept iff the residue
/// g + L1(f(L2 x)) is affine. Basis pairs determine the full bilinear
/// identity, so acceptance here is exact.
fn lift(pattern: &QuadSide, target: &QuadSide, l2cols: &[Elt]) -> Option<Witness> {
    let n = pattern.f.n();
    let size = pattern.pi.len();
    let fl = pattern.f.lut();
    let gl = target.f.lut();
    let mut sys = PairSolve::default();
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            if !sys.insert(bform(fl, l2cols[i], l2cols[j]), bform(gl, 1 << i, 1 << j)) {
                return None;
            }
        }
    }
    let l1 = sys.complete(n)?;
    let l2 = LinearMap::new(n, l2cols.to_vec());
    let mut avals = vec![0u16; size];
    for x in 0..size {
        avals[x] = gl[x] ^ l1.apply(fl[l2.apply(x as Elt) as usize]);
    }
    let c = avals[0];
    let alin = LinearMap::new(n, (0..n).map(|i| avals[1usize << i] ^ c).collect());
    for x in 0..size {
        if avals[x] != alin.apply(x as Elt) ^ c {
            return None;
        }
    }
    let w = Witness::Ea(EaTriple {
        l1: AffineMap::new(l1, 0),
        l2: AffineMap::new(l2, 0),
        a: AffineMap::new(alin, c),
    });
    debug_assert!(w.verify(&pattern.f, &target.f));
    Some(w)
}

/// Shared state of one search: the target assignment x -> L2(x) grows as a
/// subspace map; two incremental systems prune it (M1 on ortho-derivative
/// values, L1 on bilinear values).
#[derive(Clone)]
struct Assign {
    l2val: Vec<u16>,
    yused: Vec<bool>,
    points: Vec<Elt>,
    basis: Vec<(Elt, Elt)>,
    m1: PairSolve,
    m1r: PairSolve,
    l1: PairSolve,
}

impl Assign {
    fn new(size: usize) -> Assign {
        let mut l2val = vec![u16::MAX; size];
        let mut yused = vec![false; size];
        l2val[0] = 0;
        yused[0] = true;
        Assign {
            l2val,
            yused,
            points: vec![0],
            basis: Vec::new(),
            m1: PairSolve::default(),
            m1r: PairSolve::default(),
            l1: PairSolve::default(),
        }
    }

    fn complete_cols(&self, n: u32) -> Vec<Elt> {
        (0..n).map(|i| self.l2val[1usize << i]).collect()
    }
}

struct Engine<'a> {
    pattern: &'a QuadSide,
    target: &'a QuadSide,
    pif_inv: Vec<Elt>,
    pig_inv: Vec<Elt>,
    anchored: bool,
    budget: u64,
    spent: u64,
}

impl<'a> Engine<'a> {
    fn new(pattern: &'a QuadSide, target: &'a QuadSide, budget: u64) -> Engine<'a> {
        let size = pattern.pi.len();
        let mut pif_inv = Vec::new();
        let mut pig_inv = Vec::new();
        if pattern.bijective && target.bijective {
            pif_inv = vec![0; size];
            pig_inv = vec![0; size];
            for x in 1..size {
                pif_inv[pattern.pi[x] as usize] = x as Elt;
                pig_inv[target.pi[x] as usize] = x as Elt;
            }
        }
        Engine {
            pattern,
            target,
            pif_inv,
            pig_inv,
            anchored: pattern.power.is_some(),
            budget,
            spent: 0,
        }
    }

    /// Record L2(x) = y and close the assignment under XOR, feeding both
    /// incremental systems and checking point labels along the way.
    fn add_point(&self, st: &mut Assign, x: Elt, y: Elt) -> bool {
        if st.l2val[x as usize] != u16::MAX {
            return st.l2val[x as usize] == y;
        }
        if st.yused[y as usize] {
            return false;
        }
        let fl = self.pattern.f.lut();
        let gl = self.target.f.lut();
        for &(xb, yb) in &st.basis {
            if !st.l1.insert(bform(fl, yb, y), bform(gl, xb, x)) {
                return false;
            }
        }
        let prior = st.points.len();
        for idx in 0..prior {
            let xd = st.points[idx];
            let yd = st.l2val[xd as usize];
            let nx = xd ^ x;
            let ny = yd ^ y;
            if st.yused[ny as usize]
                || self.target.labels[nx as usize] != self.pattern.labels[ny as usize]
                || !st.m1.insert(self.pattern.pi[ny as usize], self.target.pi[nx as usize])
                || !st.m1r.insert(self.target.pi[nx as usize], self.pattern.pi[ny as usize])
            {
                return false;
            }
            st.l2val[nx as usize] = ny;
            st.yused[ny as usize] = true;
            st.points.push(nx);
        }
        st.basis.push((x, y));
        true
    }

    // -- structured candidates: multiplications composed with Frobenius --

    fn seed_pass(&mut self) -> Option<Witness> {
        let spec = self.pattern.f.spec();
        let n = spec.n();
        let size = spec.size();
        let probes: Vec<Elt> =
            [1u16, 2, 3, 4, 5, 8, 9, 15].iter().copied().filter(|&x| (x as usize) < size).collect();
        for j in 0..n {
            for ue in 1..size {
                if self.spent >= self.budget {
                    return None;
                }
                self.spent += 1;
                let u = ue as Elt;
                let mut sys = PairSolve::default();
                let mut ok = true;
                for &x in &probes {
                    let y = spec.mul(u, spec.pow_u(x, 1u64 << j));
                    if !sys.insert(self.pattern.pi[y as usize], self.target.pi[x as usize]) {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                let cols: Vec<Elt> =
                    (0..n).map(|i| spec.mul(u, spec.pow_u(1 << i, 1u64 << j))).collect();
                if let Some(w) = lift(self.pattern, self.target, &cols) {
                    return Some(w);
                }
            }
        }
        None
    }

    // -- propagation engine for bijective ortho-derivatives --

    /// Derive every forced assignment: a pattern point whose
    /// ortho-derivative value has a determined M1 image pins the matching
    /// target point, and vice versa.
    fn propagate(&self, st: &mut Assign) -> bool {
        let size = st.l2val.len();
        loop {
            let before = st.points.len();
            for ye in 1..size {
                if st.yused[ye] {
                    continue;
                }
                if let Some(w) = st.m1.image(self.pattern.pi[ye]) {
                    let x = self.pig_inv[w as usize];
                    if !self.add_point(st, x, ye as Elt) {
                        return false;
                    }
                }
            }
            for xe in 1..size {
                if st.l2val[xe] != u16::MAX {
                    continue;
                }
                if let Some(u) = st.m1r.image(self.target.pi[xe]) {
                    let y = self.pif_inv[u as usize];
                    if !self.add_point(st, xe as Elt, y) {
                        return false;
                    }
                }
            }
            if st.points.len() == before {
                return true;
            }
        }
    }

    fn tofro(&mut self, st: &Assign, depth: usize) -> Outcome {
        let size = st.l2val.len();
        let Some(x0) = (1..size).find(|&x| st.l2val[x] == u16::MAX) else {
            let cols = st.complete_cols(self.pattern.f.n());
            return match lift(self.pattern, self.target, &cols) {
                Some(w) => Outcome::Found(w),
                None => Outcome::Exhausted,
            };
        };
        let want = self.target.labels[x0];
        let Some(list) = self.pattern.by_label.get(&want) else {
            return Outcome::Exhausted;
        };
        // A monomial pattern commutes with every field multiplication, so
        // witnesses come in full scaling orbits: the first assigned value
        // can be fixed to the first eligible candidate.
        let anchor = self.anchored && depth == 0;
        for &y0 in list {
            if st.yused[y0 as usize] {
                continue;
            }
            // cheap consistency precheck before cloning the state
            if let Some(w) = st.m1.image(self.pattern.pi[y0 as usize]) {
                if w != self.target.pi[x0] {
                    if anchor {
                        break;
                    }
                    continue;
                }
            }
            if self.spent >= self.budget {
                return Outcome::OverBudget;
            }
            self.spent += 1;
            let mut next = st.clone();
            if self.add_point(&mut next, x0 as Elt, y0) && self.propagate(&mut next) {
                match self.tofro(&next, depth + 1) {
                    Outcome::Exhausted => {}
                    other => return other,
                }
            }
            if anchor {
                break;
            }
        }
        Outcome::Exhausted
    }

    // -- column backtracking for fibered ortho-derivatives --

    fn column_dfs(&mut self) -> Outcome {
        let n = self.pattern.f.n() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&b| {
            let l = self.target.labels[1usize << b];
            self.pattern.by_label.get(&l).map_or(0, |v| v.len())
        });
        let mut st = Assign::new(self.pattern.pi.len());
        self.column_rec(&mut st, &order, 0)
    }

    fn column_rec(&mut self, st: &mut Assign, order: &[usize], level: usize) -> Outcome {
        let n = order.len();
        if level == n {
            let cols = st.complete_cols(n as u32);
            return match lift(self.pattern, self.target, &cols) {
                Some(w) => Outcome::Found(w),
                None => Outcome::Exhausted,
            };
        }
        let e: Elt = 1 << order[level];
        let want = self.target.labels[e as usize];
        let Some(list) = self.pattern.by_label.get(&want) else {
            return Outcome::Exhausted;
        };
        let keep = st.points.len();
        let keep_basis = st.basis.len();
        for &y in list {
            if st.yused[y as usize] {
                continue;
            }
            // Scaling cancels against a monomial pattern, so the first
            // column is pinned to 1; squaring then still cancels, so the
            // second column ranges over Frobenius-orbit minima only.
            if self.anchored {
                if level == 0 && y != 1 {
                    continue;
                }
                if level == 1 && !frob_orbit_min(self.pattern.f.spec(), y) {
                    continue;
                }
            }
            if self.spent >= self.budget {
                return Outcome::OverBudget;
            }
            self.spent += 1;
            let m1_snap = st.m1.clone();
            let m1r_snap = st.m1r.clone();
            let l1_snap = st.l1.clone();
            if self.add_point(st, e, y) {
                match self.column_rec(st, order, level + 1) {
                    Outcome::Exhausted => {}
                    other => return other,
                }
            }
            for &x in &st.points[keep..] {
                let yy = st.l2val[x as usize];
                st.yused[yy as usize] = false;
                st.l2val[x as usize] = u16::MAX;
            }
            st.points.truncate(keep);
            st.basis.truncate(keep_basis);
            st.m1 = m1_snap.clone();
            st.m1r = m1r_snap.clone();
            st.l1 = l1_snap.clone();
        }
        Outcome::Exhausted
    }
}

fn frob_orbit_min(spec: &FieldSpec, y: Elt) -> bool {
    let mut t = y;
    for _ in 1..spec.n() {
        t = spec.mul(t, t);
        if t < y {
            return false;
        }
    }
    true
}

/// Complete EA-equivalence search between two quadratic APN functions.
/// Returns a witness, or Inequivalent after exhausting the pruned-but-
/// complete candidate space, or Undecided when the node budget runs out.
/// For quadratic APN functions CCZ- and EA-equivalence coincide, so an
/// exhausted search is a CCZ verdict.
pub fn ea_search_quadratic(
    pattern: &QuadSide,
    target: &QuadSide,
    budget: u64,
) -> Result<Verdict, EquivError> {
    let (nf, ng) = (pattern.f.n(), target.f.n());
    if nf != ng {
        return Err(EquivError::MismatchedDimension(nf, ng));
    }
    let mut eng = Engine::new(pattern, target, budget);
    if let Some(w) = eng.seed_pass() {
        return Ok(Verdict::Equivalent(w));
    }
    let outcome = if pattern.bijective && target.bijective {
        let st = Assign::new(pattern.pi.len());
        eng.tofro(&st, 0)
    } else {
        eng.column_dfs()
    };
    Ok(match outcome {
        Outcome::Found(w) => Verdict::Equivalent(w),
        Outcome::Exhausted => Verdict::Inequivalent(Separator::SearchExhausted),
        Outcome::OverBudget => Verdict::Undecided { budget_spent: eng.spent },
    })
}

/// Composition of affine maps as functions: (outer . inner)(x).
fn affine_compose(outer: &AffineMap, inner: &AffineMap) -> AffineMap {
    let linear = outer.linear.compose(&inner.linear);
    let c = outer.linear.apply(inner.c) ^ outer.c;
    AffineMap::new(linear, c)
}

/// Chain a witness for g = l1 o f o l2 + a with one for h in terms of g into
/// a witness for h in terms of f. Equivalence is transitive; this makes the
/// transitivity constructive.
pub fn compose_ea(first: &EaTriple, then: &EaTriple) -> EaTriple {
    let l1 = affine_compose(&then.l1, &first.l1);
    let l2 = affine_compose(&first.l2, &then.l2);
    // Substituting g into the second relation routes the first affine part
    // through the second outer linear map; the second affine part adds on.
    let mid = affine_compose(&AffineMap::new(then.l1.linear.clone(), 0), &first.a);
    let routed = affine_compose(&mid, &then.l2);
    let n = routed.linear.n();
    let a_lin = LinearMap::new(
        n,
        (0..n).map(|i| routed.linear.apply(1 << i) ^ then.a.linear.apply(1 << i)).collect(),
    );
    EaTriple { l1, l2, a: AffineMap::new(a_lin, routed.c ^ then.a.c) }
}

fn affine_inverse(m: &AffineMap) -> Result<AffineMap, EquivError> {
    let li = m
        .linear
        .inverse()
        .map_err(|_| EquivError::PreconditionViolated("witness map is singular".into()))?;
    let c = li.apply(m.c);
    Ok(AffineMap::new(li, c))
}

/// Turn a witness for g = l1 o f o l2 + a into one for f in terms of g.
fn invert_ea(t: &EaTriple) -> Result<EaTriple, EquivError> {
    let l1i = affine_inverse(&t.l1)?;
    let l2i = affine_inverse(&t.l2)?;
    let a_lin = l1i.linear.compose(&t.a.linear).compose(&l2i.linear);
    let a_c = l1i
        .linear
        .apply(t.a.linear.apply(l2i.linear.apply(t.l2.c)) ^ t.l1.c ^ t.a.c);
    Ok(EaTriple {
        l1: AffineMap::new(l1i.linear, 0),
        l2: l2i,
        a: AffineMap::new(a_lin, a_c),
    })
}

pub fn ccz_decide(f: &Vbf, g: &Vbf) -> Result<Verdict, EquivError> {
    ccz_decide_with(f, g, default_budget(f.n()), &BundleOptions::default())
}

/// Decision ladder: exact power arithmetic, then the degree-preservation
/// theorem for quadratic-versus-power, then invariant separation, then the
/// complete EA search for quadratic pairs. Anything else stays Undecided.
pub fn ccz_decide_with(
    f: &Vbf,
    g: &Vbf,
    budget: u64,
    opts: &BundleOptions,
) -> Result<Verdict, EquivError> {
    if f.n() != g.n() {
        return Err(EquivError::MismatchedDimension(f.n(), g.n()));
    }
    if !is_apn(f) || !is_apn(g) {
        return Err(EquivError::Analysis(AnalysisError::NotApn));
    }
    let pf = plain_power_exponent(f);
    let pg = plain_power_exponent(g);
    if let (Some(d1), Some(d2)) = (pf, pg) {
        return power_power_decide(f.spec(), d1, d2);
    }
    let fq = f.is_quadratic();
    let gq = g.is_quadratic();
    if (fq && !gq && pg.is_some()) || (gq && !fq && pf.is_some()) {
        return Ok(Verdict::Inequivalent(Separator::QuadraticVersusNonquadraticPower));
    }
    let prof_f = invariant_profile(f, opts)?;
    let prof_g = invariant_profile(g, opts)?;
    if let Some(name) = profile_separator(&prof_f, &prof_g) {
        return Ok(Verdict::Inequivalent(Separator::DistinctInvariant(name.into())));
    }
    if fq && gq {
        // Prefer the monomial side as the pattern: its scaling symmetry
        // anchors the search.
        let swap = pg.is_some() && pf.is_none();
        let (pat, tar) = if swap { (g, f) } else { (f, g) };
        let ps = QuadSide::prepare(pat)?;
        let ts = QuadSide::prepare(tar)?;
        let verdict = ea_search_quadratic(&ps, &ts, budget)?;
        return Ok(match verdict {
            Verdict::Equivalent(Witness::Ea(t)) if swap => {
                let inv = invert_ea(&t)?;
                debug_assert!(Witness::Ea(inv.clone()).verify(f, g));
                Verdict::Equivalent(Witness::Ea(inv))
            }
            other => other,
        });
    }
    Ok(Verdict::Undecided { budget_spent: 0 })
}
