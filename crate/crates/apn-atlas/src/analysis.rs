//! Differential and linear properties of vectorial Boolean functions:
//! difference distribution, Walsh spectra, nonlinearity, almost-bent and
//! almost-perfect-nonlinear tests, ortho-derivatives of quadratic APN
//! functions, and GF(2)-ranks of the associated incidence structures.

use crate::field::Elt;
use crate::vbf::Vbf;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("function is not quadratic")]
    NotQuadratic,
    #[error("function is not APN")]
    NotApn,
    #[error("derivative image set is degenerate")]
    DegenerateImageSet,
    #[error("dimension {n} exceeds the rank cap {cap}")]
    DimensionCapExceeded { n: u32, cap: u32 },
}

/// Multiset of values, e.g. DDT entries or |Walsh| values, as value -> count.
pub type Spectrum = BTreeMap<u32, u64>;

/// Full difference distribution table: `table[a][b]` counts solutions of
/// F(x) + F(x+a) = b.
pub fn ddt(f: &Vbf) -> Vec<Vec<u32>> {
    let size = f.spec().size();
    let lut = f.lut();
    let mut table = vec![vec![0u32; size]; size];
    for a in 0..size {
        let row = &mut table[a];
        for x in 0..size {
            row[(lut[x] ^ lut[x ^ a]) as usize] += 1;
        }
    }
    table
}

pub fn differential_uniformity(f: &Vbf) -> u32 {
    let size = f.spec().size();
    let lut = f.lut();
    let mut row = vec![0u32; size];
    let mut best = 0;
    for a in 1..size {
        row.fill(0);
        for x in 0..size {
            row[(lut[x] ^ lut[x ^ a]) as usize] += 1;
        }
        best = best.max(*row.iter().max().unwrap());
    }
    best
}

/// DDT entries over a != 0 (all b) as a multiset.
pub fn diff_spectrum(f: &Vbf) -> Spectrum {
    let size = f.spec().size();
    let lut = f.lut();
    let mut row = vec![0u32; size];
    let mut hist = vec![0u64; size + 1];
    for a in 1..size {
        row.fill(0);
        for x in 0..size {
            row[(lut[x] ^ lut[x ^ a]) as usize] += 1;
        }
        for &v in &row {
            hist[v as usize] += 1;
        }
    }
    hist.iter()
        .enumerate()
        .filter(|&(_, &c)| c != 0)
        .map(|(v, &c)| (v as u32, c))
        .collect()
}

/// APN test with early abort: a row entry reaching 3 sinks the candidate
/// immediately.
pub fn is_apn(f: &Vbf) -> bool {
    is_apn_lut(f.lut())
}

/// As [`is_apn`] but on a raw table of length 2^n.
pub fn is_apn_lut(lut: &[u16]) -> bool {
    let size = lut.len();
    let mut row = vec![0u8; size];
    for a in 1..size {
        row.fill(0);
        for x in 0..size {
            let b = (lut[x] ^ lut[x ^ a]) as usize;
            row[b] += 1;
            if row[b] > 2 {
                return false;
            }
        }
    }
    true
}

/// In-place fast Walsh-Hadamard transform.
fn fwht(a: &mut [i32]) {
    let mut h = 1;
    while h < a.len() {
        for chunk in a.chunks_exact_mut(h * 2) {
            let (lo, hi) = chunk.split_at_mut(h);
            for i in 0..h {
                let x = lo[i];
                let y = hi[i];
                lo[i] = x + y;
                hi[i] = x - y;
            }
        }
        h *= 2;
    }
}

#[inline]
fn bit_dot(a: u16, b: u16) -> u32 {
    (a & b).count_ones() & 1
}

fn component_signs(lut: &[u16], b: u16, out: &mut [i32]) {
    for (x, &v) in lut.iter().enumerate() {
        out[x] = 1 - 2 * bit_dot(b, v) as i32;
    }
}

/// All Walsh coefficients lambda(a,b) = sum over x of (-1)^(b.F(x) + a.x),
/// indexed `[b][a]`. The inner product is the bitwise dot product on
/// encodings. Row b = 0 is the trivial spectrum of the zero component.
pub fn walsh_full(f: &Vbf) -> Vec<Vec<i32>> {
    let size = f.spec().size();
    let mut out = Vec::with_capacity(size);
    let mut row0 = vec![0i32; size];
    row0[0] = size as i32;
    out.push(row0);
    let mut buf = vec![0i32; size];
    for b in 1..size as u16 {
        component_signs(f.lut(), b, &mut buf);
        fwht(&mut buf);
        out.push(buf.clone());
    }
    out
}

/// Multiset of |lambda(a,b)| over all a and b != 0, one Walsh pass per
/// component.
pub fn extended_walsh_spectrum(f: &Vbf) -> Spectrum {
    let size = f.spec().size();
    let mut buf = vec![0i32; size];
    let mut hist = vec![0u64; size + 1];
    for b in 1..size as u16 {
        component_signs(f.lut(), b, &mut buf);
        fwht(&mut buf);
        for &v in &buf {
            hist[v.unsigned_abs() as usize] += 1;
        }
    }
    hist.iter()
        .enumerate()
        .filter(|&(_, &c)| c != 0)
        .map(|(v, &c)| (v as u32, c))
        .collect()
}

fn max_abs_walsh(f: &Vbf) -> u32 {
    *extended_walsh_spectrum(f).keys().last().unwrap()
}

/// 2^(n-1) - max|lambda|/2 over all a and b != 0.
pub fn nonlinearity(f: &Vbf) -> u32 {
    let half = (f.spec().size() / 2) as u32;
    half - max_abs_walsh(f) / 2
}

/// Almost bent: n odd and every |lambda| in {0, 2^((n+1)/2)}.
pub fn is_ab(f: &Vbf) -> bool {
    let n = f.n();
    if n % 2 == 0 {
        return false;
    }
    let peak = 1u32 << ((n + 1) / 2);
    extended_walsh_spectrum(f).keys().all(|&v| v == 0 || v == peak)
}

/// The symmetric bilinear companion of F on the unit-vector basis:
/// `B[i][j] = F(e_i + e_j) + F(e_i) + F(e_j) + F(0)`. For quadratic F this
/// determines the derivative structure completely.
pub fn bilinear_basis(f: &Vbf) -> Vec<Vec<Elt>> {
    let n = f.n() as usize;
    let lut = f.lut();
    let mut b = vec![vec![0 as Elt; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = lut[(1 << i) ^ (1 << j)] ^ lut[1 << i] ^ lut[1 << j] ^ lut[0];
        }
    }
    b
}

/// Rank of a set of vectors over GF(2), vectors as bit masks.
fn bit_rank(rows: impl IntoIterator<Item = u16>) -> u32 {
    let mut basis = [0u16; 16];
    let mut rank = 0;
    for mut r in rows {
        while r != 0 {
            let lead = r.trailing_zeros() as usize;
            if basis[lead] == 0 {
                basis[lead] = r;
                rank += 1;
                break;
            }
            r ^= basis[lead];
        }
    }
    rank
}

/// APN test for functions of algebraic degree at most 2, via derivative
/// ranks: F is APN iff x -> F(x+a)+F(x)+F(a)+F(0) has rank n-1 for every
/// a != 0. Runs in about n 2^n table probes; the caller guarantees the
/// degree bound.
pub fn is_apn_quadratic(f: &Vbf) -> bool {
    is_apn_quadratic_lut(f.n(), f.lut())
}

/// As [`is_apn_quadratic`] but on a raw table of length 2^n.
pub fn is_apn_quadratic_lut(n: u32, lut: &[u16]) -> bool {
    let size = lut.len();
    for a in 1..size {
        let base = lut[a] ^ lut[0];
        let rank = bit_rank(
            (0..n).map(|i| lut[a ^ (1 << i) as usize] ^ lut[1 << i as usize] ^ base),
        );
        if rank != n - 1 {
            return false;
        }
    }
    true
}

/// Extended Walsh spectrum of a function of degree at most 2, from the
/// GF(2)-ranks of the component bilinear forms: a component whose form has
/// rank 2h contributes 2^(2h) values of magnitude 2^(n-h) and zeros
/// elsewhere. Exact for any such function; the caller guarantees the
/// degree bound.
pub fn extended_walsh_spectrum_quadratic(f: &Vbf) -> Spectrum {
    let n = f.n();
    let size = f.spec().size();
    let bb = bilinear_basis(f);
    let mut hist = vec![0u64; size + 1];
    for b in 1..size as u16 {
        let rank = bit_rank((0..n as usize).map(|i| {
            let mut row: u16 = 0;
            for (j, &v) in bb[i].iter().enumerate() {
                row |= (bit_dot(b, v) as u16) << j;
            }
            row
        }));
        debug_assert_eq!(rank % 2, 0);
        let h = rank / 2;
        hist[(1usize << (n - h)).min(size)] += 1u64 << (2 * h);
        hist[0] += (size as u64) - (1u64 << (2 * h));
    }
    hist.iter()
        .enumerate()
        .filter(|&(_, &c)| c != 0)
        .map(|(v, &c)| (v as u32, c))
        .collect()
}

/// Kernel vector of the row space spanned by `rows` when that kernel is
/// exactly one-dimensional; rows are constraint masks (dot(row, x) = 0).
fn unique_kernel_vector(rows: &[u16], n: u32) -> Option<u16> {
    let mut pivots: Vec<(u32, u16)> = Vec::with_capacity(n as usize); // (col, row)
    for &r0 in rows {
        let mut r = r0;
        for &(c, p) in &pivots {
            if r >> c & 1 == 1 {
                r ^= p;
            }
        }
        if r != 0 {
            let c = r.trailing_zeros();
            for (_, p) in pivots.iter_mut() {
                if *p >> c & 1 == 1 {
                    *p ^= r;
                }
            }
            pivots.push((c, r));
        }
    }
    if pivots.len() != n as usize - 1 {
        return None;
    }
    let used: u16 = pivots.iter().fold(0, |m, &(c, _)| m | 1 << c);
    let free = (!used & ((1u32 << n) as u16).wrapping_sub(1)).trailing_zeros();
    let mut x: u16 = 1 << free;
    for &(c, p) in &pivots {
        if p >> free & 1 == 1 {
            x |= 1 << c;
        }
    }
    Some(x)
}

pub(crate) fn ortho_derivative_unchecked(f: &Vbf) -> Option<Vbf> {
    let spec = f.spec();
    let n = spec.n();
    let size = spec.size();
    let lut = f.lut();
    let mut pi = vec![0 as Elt; size];
    let mut rows = vec![0u16; n as usize];
    for a in 1..size {
        let base = lut[a] ^ lut[0];
        for (i, r) in rows.iter_mut().enumerate() {
            let w = lut[a ^ (1 << i)] ^ lut[1 << i] ^ base;
            *r = spec.tr_mask(w);
        }
        pi[a] = unique_kernel_vector(&rows, n)?;
    }
    Some(Vbf::from_lut(spec, pi).expect("kernel vectors are field elements"))
}

/// Ortho-derivative of a quadratic APN function with F(0) normalized to 0:
/// pi(0) = 0 and pi(a) is the unique nonzero element orthogonal, under
/// tr(uv), to the derivative image space {F(x)+F(x+a)+F(a)+F(0)}.
pub fn ortho_derivative(f: &Vbf) -> Result<Vbf, AnalysisError> {
    if f.algebraic_degree() != 2 {
        return Err(AnalysisError::NotQuadratic);
    }
    if !is_apn_quadratic(f) {
        return Err(AnalysisError::NotApn);
    }
    ortho_derivative_unchecked(f).ok_or(AnalysisError::DegenerateImageSet)
}

pub const DEFAULT_RANK_CAP: u32 = 8;

/// XOR-permute a bitset of 2^k bits within each 64-bit word: bit j of the
/// result is bit j^v of the input, v < 64.
#[inline]
fn word_xor_permute(mut x: u64, v: u32) -> u64 {
    const M: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0f0f_0f0f_0f0f_0f0f,
        0x00ff_00ff_00ff_00ff,
        0x0000_ffff_0000_ffff,
        0x0000_0000_ffff_ffff,
    ];
    for k in 0..6 {
        if v >> k & 1 == 1 {
            let s = 1u32 << k;
            x = ((x & M[k]) << s) | ((x >> s) & M[k]);
        }
    }
    x
}

/// Rank over GF(2) of the translate matrix rows r_v[u] = chi[u ^ v], where
/// chi is the characteristic bitset of a subset of a 2^dim-element group.
/// Rows are generated streamingly and fed into an online elimination that
/// keeps only the current basis.
fn translate_matrix_rank(chi: &[u64], dim: usize) -> u64 {
    let words = chi.len();
    let mut basis: Vec<Box<[u64]>> = Vec::new();
    let mut basis_lead: Vec<usize> = Vec::new();
    let mut lead_of = vec![u32::MAX; dim];
    let mut row: Vec<u64> = vec![0; words];
    for v in 0..dim {
        let hi = v >> 6;
        let lo = (v & 63) as u32;
        for w in 0..words {
            row[w] = word_xor_permute(chi[w ^ hi], lo);
        }
        let mut from = 0usize;
        loop {
            let Some(wi) = (from / 64..words).find(|&w| row[w] != 0) else { break };
            let lead = wi * 64 + row[wi].trailing_zeros() as usize;
            let bi = lead_of[lead];
            if bi == u32::MAX {
                lead_of[lead] = basis.len() as u32;
                basis_lead.push(lead);
                basis.push(row.clone().into_boxed_slice());
                break;
            }
            let b = &basis[bi as usize];
            for w in wi..words {
                row[w] ^= b[w];
            }
            from = lead + 1;
        }
    }
    basis.len() as u64
}

fn incidence_rank(spec_n: u32, points: impl IntoIterator<Item = usize>) -> u64 {
    let dim = 1usize << (2 * spec_n);
    let words = dim.div_ceil(64);
    let mut chi = vec![0u64; words];
    for p in points {
        chi[p >> 6] |= 1u64 << (p & 63);
    }
    translate_matrix_rank(&chi, dim)
}

/// GF(2)-rank of the 2^2n x 2^2n incidence matrix of translates of the
/// graph {(x, F(x))}.
pub fn gamma_rank(f: &Vbf) -> Result<u64, AnalysisError> {
    gamma_rank_capped(f, DEFAULT_RANK_CAP)
}

pub fn gamma_rank_capped(f: &Vbf, cap: u32) -> Result<u64, AnalysisError> {
    let n = f.n();
    if n > cap {
        return Err(AnalysisError::DimensionCapExceeded { n, cap });
    }
    let lut = f.lut();
    Ok(incidence_rank(
        n,
        (0..f.spec().size()).map(|x| x << n | lut[x] as usize),
    ))
}

/// Like [`gamma_rank`] but for translates of the difference set
/// {(a, F(x)+F(x+a)) : a != 0}.
pub fn delta_rank(f: &Vbf) -> Result<u64, AnalysisError> {
    delta_rank_capped(f, DEFAULT_RANK_CAP)
}

pub fn delta_rank_capped(f: &Vbf, cap: u32) -> Result<u64, AnalysisError> {
    let n = f.n();
    if n > cap {
        return Err(AnalysisError::DimensionCapExceeded { n, cap });
    }
    let size = f.spec().size();
    let lut = f.lut();
    let mut seen = vec![false; size << n];
    for a in 1..size {
        for x in 0..size {
            seen[a << n | (lut[x] ^ lut[x ^ a]) as usize] = true;
        }
    }
    Ok(incidence_rank(
        n,
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(p, _)| p),
    ))
}

/// The invariant fingerprint used to separate CCZ classes. Ortho-derivative
/// spectra are present exactly for quadratic APN inputs; ranks when
/// requested and within the cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantBundle {
    pub degree: u32,
    pub diff_spectrum: Spectrum,
    pub extended_walsh: Spectrum,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ortho_diff_spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ortho_extended_walsh: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_rank: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_rank: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BundleOptions {
    pub with_ranks: bool,
    pub rank_cap: u32,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions { with_ranks: false, rank_cap: DEFAULT_RANK_CAP }
    }
}

impl InvariantBundle {
    /// Canonical serialized form: fixed field order, spectra sorted by value.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("bundle serializes")
    }

    pub fn hash_hex(&self) -> String {
        let d = Sha256::digest(self.canonical_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn invariant_bundle(f: &Vbf, opts: &BundleOptions) -> InvariantBundle {
    let degree = f.algebraic_degree();
    let mut bundle = InvariantBundle {
        degree,
        diff_spectrum: diff_spectrum(f),
        extended_walsh: extended_walsh_spectrum(f),
        ortho_diff_spectrum: None,
        ortho_extended_walsh: None,
        gamma_rank: None,
        delta_rank: None,
    };
    if degree == 2 && is_apn_quadratic(f) {
        if let Some(pi) = ortho_derivative_unchecked(f) {
            bundle.ortho_diff_spectrum = Some(diff_spectrum(&pi));
            bundle.ortho_extended_walsh = Some(extended_walsh_spectrum(&pi));
        }
    }
    if opts.with_ranks && f.n() <= opts.rank_cap {
        bundle.gamma_rank = Some(gamma_rank_capped(f, opts.rank_cap).unwrap());
        bundle.delta_rank = Some(delta_rank_capped(f, opts.rank_cap).unwrap());
    }
    bundle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::vbf::{AffineMap, LinearMap, UnivariatePoly};
    use rand::{Rng, SeedableRng};

    fn f(n: u32) -> FieldSpec {
        FieldSpec::new(n, None).unwrap()
    }

    fn power(n: u32, d: u32) -> Vbf {
        Vbf::power(&f(n), d).unwrap()
    }

    fn random_vbf(n: u32, rng: &mut impl Rng) -> Vbf {
        let spec = f(n);
        let size = spec.size();
        let lut = (0..size).map(|_| rng.gen::<u16>() & (size as u16 - 1)).collect();
        Vbf::from_lut(&spec, lut).unwrap()
    }

    fn random_invertible_affine(n: u32, rng: &mut impl Rng) -> AffineMap {
        loop {
            let cols: Vec<u16> = (0..n).map(|_| rng.gen::<u16>() & ((1 << n) - 1)).collect();
            let l = LinearMap::new(n, cols);
            if l.is_invertible() {
                return AffineMap::new(l, rng.gen::<u16>() & ((1 << n) - 1));
            }
        }
    }

    #[test]
    fn identity_ddt_is_concentrated() {
        let id = power(4, 1);
        let t = ddt(&id);
        assert_eq!(differential_uniformity(&id), 16);
        for a in 1..16usize {
            for b in 0..16usize {
                assert_eq!(t[a][b], if a == b { 16 } else { 0 });
            }
        }
        assert!(!is_apn(&id));
    }

    #[test]
    fn gold_and_non_gold_uniformities() {
        assert!(is_apn(&power(7, 3)));
        assert_eq!(differential_uniformity(&power(6, 5)), 4);
        assert!(!is_apn(&power(6, 5)));
        assert!(is_apn(&power(6, 3)));
    }

    #[test]
    fn apn_fast_and_full_paths_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut cases = vec![power(6, 3), power(6, 5), power(7, 3), power(5, 15)];
        for _ in 0..10 {
            cases.push(random_vbf(5, &mut rng));
        }
        for v in &cases {
            assert_eq!(is_apn(v), differential_uniformity(v) == 2);
        }
    }

    #[test]
    fn ddt_rows_sum_and_are_even() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for v in [power(6, 3), power(8, 9), random_vbf(6, &mut rng)] {
            let size = v.spec().size() as u32;
            let t = ddt(&v);
            for a in 1..size as usize {
                assert_eq!(t[a].iter().sum::<u32>(), size);
                assert!(t[a].iter().all(|&e| e % 2 == 0));
            }
        }
    }

    #[test]
    fn apn_diff_spectrum_shape() {
        // for APN F each row a != 0 has 2^(n-1) twos and the rest zeros
        let v = power(6, 3);
        let s = diff_spectrum(&v);
        let rows = 63u64;
        assert_eq!(s.get(&2), Some(&(rows * 32)));
        assert_eq!(s.get(&0), Some(&(rows * 32)));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn walsh_matches_direct_summation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for n in [3u32, 4] {
            let v = random_vbf(n, &mut rng);
            let size = v.spec().size();
            let table = walsh_full(&v);
            for b in 0..size as u16 {
                for a in 0..size as u16 {
                    let direct: i32 = (0..size as u16)
                        .map(|x| {
                            let e = bit_dot(b, v.apply(x)) ^ bit_dot(a, x);
                            1 - 2 * e as i32
                        })
                        .sum();
                    assert_eq!(table[b as usize][a as usize], direct, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn known_walsh_spectra() {
        // odd-dimension Gold: values in {0, +-2^((n+1)/2)}
        let v7 = power(7, 3);
        let s7 = extended_walsh_spectrum(&v7);
        assert!(s7.keys().all(|&k| k == 0 || k == 16));
        assert_eq!(nonlinearity(&v7), 56);
        assert!(is_ab(&v7));

        // even-dimension Gold: values in {0, +-2^(n/2), +-2^((n+2)/2)}
        let v6 = power(6, 3);
        let s6 = extended_walsh_spectrum(&v6);
        assert!(s6.keys().all(|&k| k == 0 || k == 8 || k == 16));
        assert!(!is_ab(&v6));

        // inverse map in odd dimension: APN but not AB
        let inv7 = power(7, 126);
        assert!(is_apn(&inv7));
        assert!(!is_ab(&inv7));
        assert_eq!(inv7.algebraic_degree(), 6);
    }

    #[test]
    fn zero_and_affine_components() {
        let spec = f(5);
        let z = Vbf::from_lut(&spec, vec![0; 32]).unwrap();
        let t = walsh_full(&z);
        for b in 1..32usize {
            assert_eq!(t[b][0], 32);
            assert!(t[b][1..].iter().all(|&v| v == 0));
        }
        assert_eq!(nonlinearity(&power(5, 1)), 0);
    }

    #[test]
    fn parseval_per_component() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for v in [power(6, 3), power(6, 5), random_vbf(6, &mut rng)] {
            let size = v.spec().size();
            let t = walsh_full(&v);
            for b in 1..size {
                let sum: i64 = t[b].iter().map(|&x| (x as i64) * (x as i64)).sum();
                assert_eq!(sum, (size * size) as i64);
            }
        }
    }

    fn random_quadratic(n: u32, rng: &mut impl Rng) -> Vbf {
        // random ANF supported on monomials of degree <= 2
        let spec = f(n);
        let size = spec.size();
        let mask = size as u16 - 1;
        let coeffs: Vec<u16> = (0..size)
            .map(|u| if (u as u32).count_ones() <= 2 { rng.gen::<u16>() & mask } else { 0 })
            .collect();
        let lut = crate::vbf::AnfForm::new(n, coeffs).to_lut();
        Vbf::from_lut(&spec, lut).unwrap()
    }

    #[test]
    fn quadratic_fast_paths_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut cases = vec![power(6, 3), power(6, 5), power(7, 3), power(6, 9)];
        for _ in 0..15 {
            cases.push(random_quadratic(6, &mut rng));
        }
        for v in &cases {
            assert!(v.algebraic_degree() <= 2);
            assert_eq!(is_apn_quadratic(v), is_apn(v));
            assert_eq!(extended_walsh_spectrum_quadratic(v), extended_walsh_spectrum(v));
        }
    }

    #[test]
    fn ortho_derivative_definition() {
        for (n, d) in [(5u32, 3u32), (6, 3), (7, 3), (7, 5), (8, 9)] {
            let v = power(n, d);
            let spec = v.spec().clone();
            let pi = ortho_derivative(&v).unwrap();
            assert_eq!(pi.apply(0), 0);
            for a in 1..spec.size() as u16 {
                let p = pi.apply(a);
                assert_ne!(p, 0, "n={n} d={d} a={a}");
                for x in spec.elements() {
                    let w = v.apply(x) ^ v.apply(x ^ a) ^ v.apply(a) ^ v.apply(0);
                    assert_eq!(spec.tr1(spec.mul(p, w)), 0, "n={n} d={d} a={a} x={x}");
                }
            }
        }
    }

    #[test]
    fn ortho_derivative_of_gold_is_inverse_power() {
        // for F = x^(2^i+1), pi(a) = a^-(2^i+1)
        for (n, i) in [(5u32, 1u32), (6, 1), (7, 1), (7, 2)] {
            let spec = f(n);
            let d = (1u32 << i) + 1;
            let pi = ortho_derivative(&Vbf::power(&spec, d).unwrap()).unwrap();
            for a in 1..spec.size() as u16 {
                assert_eq!(pi.apply(a), spec.pow(a, -(d as i64)).unwrap());
            }
        }
    }

    #[test]
    fn ortho_derivative_errors() {
        assert_eq!(ortho_derivative(&power(7, 126)).unwrap_err(), AnalysisError::NotQuadratic);
        assert_eq!(ortho_derivative(&power(6, 5)).unwrap_err(), AnalysisError::NotApn);
        assert_eq!(ortho_derivative(&power(5, 1)).unwrap_err(), AnalysisError::NotQuadratic);
    }

    #[test]
    fn ortho_spectra_invariant_under_ea() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        let v = power(6, 3);
        let pi_spec = diff_spectrum(&ortho_derivative(&v).unwrap());
        let pi_walsh = extended_walsh_spectrum(&ortho_derivative(&v).unwrap());
        for _ in 0..5 {
            let l1 = random_invertible_affine(6, &mut rng);
            let l2 = random_invertible_affine(6, &mut rng);
            let a = random_invertible_affine(6, &mut rng); // invertibility irrelevant here
            let g = v.apply_ea(&l1, &l2, &a).unwrap();
            let pi_g = ortho_derivative(&g).unwrap();
            assert_eq!(diff_spectrum(&pi_g), pi_spec);
            assert_eq!(extended_walsh_spectrum(&pi_g), pi_walsh);
        }
    }

    #[test]
    fn spectra_invariant_under_ea() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        for v in [power(6, 3), power(7, 5)] {
            let n = v.n();
            let ds = diff_spectrum(&v);
            let ws = extended_walsh_spectrum(&v);
            for _ in 0..5 {
                let l1 = random_invertible_affine(n, &mut rng);
                let l2 = random_invertible_affine(n, &mut rng);
                let a = random_invertible_affine(n, &mut rng);
                let g = v.apply_ea(&l1, &l2, &a).unwrap();
                assert_eq!(diff_spectrum(&g), ds);
                assert_eq!(extended_walsh_spectrum(&g), ws);
            }
        }
    }

    /// Dense from-scratch rank of the same translate matrix, for
    /// cross-checking the streaming elimination.
    fn naive_translate_rank(points: &[usize], dim: usize) -> u64 {
        let words = dim.div_ceil(64);
        let mut chi = vec![0u64; words];
        for &p in points {
            chi[p >> 6] |= 1u64 << (p & 63);
        }
        let mut rows: Vec<Vec<u64>> = (0..dim)
            .map(|v| {
                let mut r = vec![0u64; words];
                for u in 0..dim {
                    if chi[(u ^ v) >> 6] >> ((u ^ v) & 63) & 1 == 1 {
                        r[u >> 6] |= 1u64 << (u & 63);
                    }
                }
                r
            })
            .collect();
        let mut rank = 0u64;
        for col in 0..dim {
            let Some(p) = (rank as usize..dim).find(|&i| rows[i][col >> 6] >> (col & 63) & 1 == 1)
            else {
                continue;
            };
            rows.swap(rank as usize, p);
            let (head, tail) = rows.split_at_mut(rank as usize + 1);
            let piv = &head[rank as usize];
            for r in tail {
                if r[col >> 6] >> (col & 63) & 1 == 1 {
                    for w in 0..words {
                        r[w] ^= piv[w];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn streaming_rank_matches_naive_on_small_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        // random subsets of an order-256 group (as if n = 4)
        for _ in 0..5 {
            let points: Vec<usize> = (0..256).filter(|_| rng.gen_bool(0.2)).collect();
            let dim = 256;
            let words = 4;
            let mut chi = vec![0u64; words];
            for &p in &points {
                chi[p >> 6] |= 1u64 << (p & 63);
            }
            assert_eq!(translate_matrix_rank(&chi, dim), naive_translate_rank(&points, dim));
        }
        // actual graph incidence at n = 4
        let v = power(4, 3);
        let points: Vec<usize> = (0..16).map(|x| x << 4 | v.apply(x as u16) as usize).collect();
        assert_eq!(
            gamma_rank(&v).unwrap(),
            naive_translate_rank(&points, 1 << 8)
        );
    }

    #[test]
    fn gamma_rank_pinned_and_ea_invariant() {
        let v = power(6, 3);
        let g = gamma_rank(&v).unwrap();
        let d = delta_rank(&v).unwrap();
        assert_eq!((g, d), (1102, 94));

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let l1 = random_invertible_affine(6, &mut rng);
        let l2 = random_invertible_affine(6, &mut rng);
        let a = random_invertible_affine(6, &mut rng);
        let t = v.apply_ea(&l1, &l2, &a).unwrap();
        assert_eq!(gamma_rank(&t).unwrap(), g);
        assert_eq!(delta_rank(&t).unwrap(), d);
    }

    #[test]
    fn rank_cap_enforced() {
        let v = power(10, 3);
        assert_eq!(
            gamma_rank(&v).unwrap_err(),
            AnalysisError::DimensionCapExceeded { n: 10, cap: 8 }
        );
        assert_eq!(
            delta_rank(&v).unwrap_err(),
            AnalysisError::DimensionCapExceeded { n: 10, cap: 8 }
        );
    }

    #[test]
    fn bundle_contents_and_hash_stability() {
        let gold = power(6, 3);
        let b = invariant_bundle(&gold, &BundleOptions::default());
        assert_eq!(b.degree, 2);
        assert!(b.ortho_diff_spectrum.is_some());
        assert!(b.ortho_extended_walsh.is_some());
        assert!(b.gamma_rank.is_none());
        assert_eq!(b.hash_hex(), invariant_bundle(&gold, &BundleOptions::default()).hash_hex());

        let with_ranks = invariant_bundle(&gold, &BundleOptions { with_ranks: true, rank_cap: 8 });
        assert_eq!(with_ranks.gamma_rank, Some(1102));
        assert_ne!(with_ranks.hash_hex(), b.hash_hex());

        // non-quadratic APN: no ortho fields
        let inv7 = power(7, 126);
        let b7 = invariant_bundle(&inv7, &BundleOptions::default());
        assert!(b7.ortho_diff_spectrum.is_none());

        // ranks silently skipped above the cap
        let big = power(10, 3);
        let b10 = invariant_bundle(&big, &BundleOptions { with_ranks: true, rank_cap: 8 });
        assert!(b10.gamma_rank.is_none());

        // round trip through serde keeps the bundle intact
        let json = serde_json::to_string(&b).unwrap();
        let back: InvariantBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn bundles_separate_known_inequivalent_functions() {
        let a = invariant_bundle(&power(7, 3), &BundleOptions::default());
        let b = invariant_bundle(&power(7, 126), &BundleOptions::default());
        assert_ne!(a.hash_hex(), b.hash_hex());

        let p = UnivariatePoly::new(&[(1, 3)]);
        let spec = f(6);
        let cube = Vbf::from_univariate(&spec, &p).unwrap();
        let other = Vbf::power(&spec, 9).unwrap(); // gcd(3,6)=3: x^9 is not even APN here
        assert_ne!(
            invariant_bundle(&cube, &BundleOptions::default()).hash_hex(),
            invariant_bundle(&other, &BundleOptions::default()).hash_hex()
        );
    }
}
