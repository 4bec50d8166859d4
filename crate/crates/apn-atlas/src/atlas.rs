//! Classification runs: enumerate families, collapse coefficient-scaling and
//! Frobenius-twist orbits symbolically, split the survivors by invariants,
//! decide the remaining pairs exactly, and emit a table of inequivalent
//! representatives with a replayable audit trail.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{BundleOptions, DEFAULT_RANK_CAP};
use crate::equiv::{
    compose_ea, cyclo_canonical, ea_search_quadratic, profile_separator, power_power_decide,
    EaTriple, EquivError, InvariantProfile, QuadSide, Separator, Verdict, Witness,
};
use crate::families::{
    enumerate_with, reduce_exponent, EnumStats, EnumStrategy, FamilyError, FamilyId,
    FamilyInstance, SymbolicForm,
};
use crate::field::{Elt, FieldError, FieldSpec};
use crate::vbf::{AffineMap, LinearMap, UnivariatePoly, Vbf, VbfError};

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("unsupported output format {0:?} (expected markdown, csv, or json)")]
    UnsupportedFormat(String),
    #[error("cache {0}")]
    CacheCorrupt(String),
    #[error("audit replay failed: {0}")]
    AuditFailure(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Vbf(#[from] VbfError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn hex32(h: &[u8; 32]) -> String {
    let mut s = String::with_capacity(64);
    for b in h {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Progress notes on stderr when ATLAS_PROGRESS is set; long runs are silent
/// otherwise.
fn progress(msg: impl FnOnce() -> String) {
    if std::env::var_os("ATLAS_PROGRESS").is_some() {
        eprintln!("[atlas] {}", msg());
    }
}

// ---------------------------------------------------------------------------
// Scaling/twist transforms on univariate forms.
// ---------------------------------------------------------------------------

/// The transform f |-> v * f(u * x^(2^ji))^(2^jo). Acting on a polynomial it
/// permutes exponents within cyclotomic structure and rescales coefficients,
/// so orbit membership can be certified term by term without any search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonoFrob {
    pub v: Elt,
    pub u: Elt,
    pub ji: u32,
    pub jo: u32,
}

impl MonoFrob {
    pub fn identity() -> MonoFrob {
        MonoFrob { v: 1, u: 1, ji: 0, jo: 0 }
    }

    /// Table-level action, used to check the symbolic one.
    pub fn apply(&self, f: &Vbf) -> Vbf {
        let spec = f.spec();
        let lut: Vec<Elt> = (0..spec.size())
            .map(|x| {
                let arg = spec.mul(self.u, spec.pow_u(x as Elt, 1u64 << self.ji));
                spec.mul(self.v, spec.pow_u(f.lut()[arg as usize], 1u64 << self.jo))
            })
            .collect();
        Vbf::from_lut(spec, lut).expect("permuted table stays well formed")
    }

    /// Term-level action: c*x^e picks up v * c^(2^jo) * (u^(2^jo))^e at
    /// exponent e * 2^(ji+jo), reduced.
    pub fn apply_poly(&self, spec: &FieldSpec, poly: &UnivariatePoly) -> UnivariatePoly {
        let n = spec.n();
        let uo = spec.pow_u(self.u, 1u64 << self.jo);
        let jt = (self.ji + self.jo) % n;
        let terms: Vec<(Elt, u32)> = poly
            .terms()
            .iter()
            .map(|&(c, e)| {
                let c2 = spec.mul(self.v, spec.mul(spec.pow_u(c, 1u64 << self.jo), spec.pow_u(uo, e as u64)));
                (c2, reduce_exponent(spec, (e as u64) << jt))
            })
            .collect();
        UnivariatePoly::new(&terms)
    }

    /// self after other: (self.compose(other))(f) = self(other(f)).
    pub fn compose(&self, spec: &FieldSpec, other: &MonoFrob) -> MonoFrob {
        let n = spec.n();
        MonoFrob {
            v: spec.mul(self.v, spec.pow_u(other.v, 1u64 << self.jo)),
            u: spec.mul(other.u, spec.pow_u(self.u, 1u64 << other.ji)),
            ji: (other.ji + self.ji) % n,
            jo: (other.jo + self.jo) % n,
        }
    }

    pub fn invert(&self, spec: &FieldSpec) -> MonoFrob {
        let n = spec.n();
        let ji = (n - self.ji) % n;
        let jo = (n - self.jo) % n;
        MonoFrob {
            v: spec.pow_u(spec.inv(self.v).expect("scaling is nonzero"), 1u64 << jo),
            u: spec.pow_u(spec.inv(self.u).expect("scaling is nonzero"), 1u64 << ji),
            ji,
            jo,
        }
    }

    /// As an explicit affine-equivalence certificate g = l1 o f o l2.
    pub fn to_triple(&self, spec: &FieldSpec) -> EaTriple {
        let l1 = LinearMap::mult_by(spec, self.v).compose(&LinearMap::frobenius(spec, self.jo));
        let l2 = LinearMap::mult_by(spec, self.u).compose(&LinearMap::frobenius(spec, self.ji));
        EaTriple {
            l1: AffineMap::new(l1, 0),
            l2: AffineMap::new(l2, 0),
            a: AffineMap::zero(spec.n()),
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical form under the scaling/twist group.
// ---------------------------------------------------------------------------

/// Orbit label: reduced exponents ascending, then the discrete logs of the
/// coefficients after the leading one is normalized to 1, minimized over the
/// whole group. Equal keys mean the two polynomials are images of one
/// canonical form, so they are affine-equivalent with an explicit transform.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonKey {
    pub exps: Vec<u32>,
    pub dlogs: Vec<u64>,
}

fn gcd64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
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

/// Minimize (a + t*w) mod m over the coset {w0 + s*l}, where s | m. Returns
/// the minimum and the sub-coset of arguments attaining it.
fn min_affine_on_coset(a: u64, t: u64, w0: u64, s: u64, m: u64) -> (u64, u64, u64) {
    let step = (t * s) % m;
    let base = (a + t * w0) % m;
    if step == 0 {
        return (base, w0, s);
    }
    let g = gcd64(step, m);
    let mu = base % g;
    let delta = (mu + m - base) % m;
    let l0 = mod_inverse(step / g, m / g).expect("reduced step is a unit") * (delta / g) % (m / g);
    let sp = gcd64(s * (m / g), m);
    let w0p = (w0 + s * l0) % m % sp;
    (mu, w0p, sp)
}

/// Canonical key of a reduced polynomial together with a transform mapping
/// the polynomial onto its canonical form. For each twist pair the exponent
/// multiset is fixed, the lead coefficient is scaled to 1, and the remaining
/// coefficient logs are affine functions of the scaling log, minimized
/// lexicographically by shrinking a solution coset one coordinate at a time.
pub fn canonicalize(spec: &FieldSpec, poly: &UnivariatePoly) -> (CanonKey, MonoFrob) {
    let n = spec.n();
    let m = spec.order();
    assert!(!poly.terms().is_empty(), "cannot canonicalize the zero function");
    let mut best: Option<(CanonKey, MonoFrob)> = None;
    for jo in 0..n {
        for ji in 0..n {
            let jt = (ji + jo) % n;
            let mut folded: Vec<(u64, u64)> = poly
                .terms()
                .iter()
                .map(|&(c, e)| {
                    let e2 = reduce_exponent(spec, (e as u64) << jt) as u64;
                    let d2 = (spec.dlog(c).expect("nonzero coefficient") << jo) % m;
                    (e2, d2)
                })
                .collect();
            folded.sort_unstable();
            debug_assert!(
                folded.windows(2).all(|w| w[0].0 != w[1].0),
                "exponent folding is injective, terms cannot merge"
            );
            let (e0, d0) = folded[0];
            let mut w0 = 0u64;
            let mut s = 1u64;
            let mut dlogs = Vec::with_capacity(folded.len() - 1);
            for &(ei, di) in &folded[1..] {
                let a = (di + m - d0) % m;
                let t = (ei + m - e0) % m;
                let (mu, nw, ns) = min_affine_on_coset(a, t, w0, s, m);
                w0 = nw;
                s = ns;
                dlogs.push(mu);
            }
            let key = CanonKey { exps: folded.iter().map(|p| p.0 as u32).collect(), dlogs };
            if best.as_ref().is_none_or(|(bk, _)| key < *bk) {
                // The minimized scaling log w acts on folded exponents, i.e.
                // after the twist, so the transform's input factor is its
                // 2^ji-th power.
                let u = spec.pow_u(spec.alog(w0), 1u64 << ji);
                let lead = (d0 + e0 * w0) % m;
                let v = spec.alog((m - lead) % m);
                best = Some((key, MonoFrob { v, u, ji, jo }));
            }
        }
    }
    let (key, mf) = best.expect("dimension is at least two");
    debug_assert_eq!(canonical_shape(spec, &mf, poly), key);
    (key, mf)
}

fn canonical_shape(spec: &FieldSpec, mf: &MonoFrob, poly: &UnivariatePoly) -> CanonKey {
    let image = mf.apply_poly(spec, poly);
    let mut terms: Vec<(Elt, u32)> = image.terms().to_vec();
    terms.sort_unstable_by_key(|t| t.1);
    assert_eq!(terms.len(), poly.terms().len(), "canonical transform merged terms");
    assert_eq!(terms[0].0, 1, "lead coefficient must normalize to 1");
    CanonKey {
        exps: terms.iter().map(|t| t.1).collect(),
        dlogs: terms[1..].iter().map(|t| spec.dlog(t.0).unwrap()).collect(),
    }
}

/// Expand a symbolic form into one reduced polynomial; the subfield trace
/// becomes its sum of conjugates, folded termwise.
pub fn expand_form(spec: &FieldSpec, form: &SymbolicForm) -> UnivariatePoly {
    match form {
        SymbolicForm::Poly(p) => p.clone(),
        SymbolicForm::TraceExpr { outer, pre, sub, inner } => {
            let mut terms: Vec<(Elt, u32)> = outer.terms().to_vec();
            let reps = spec.n() / sub;
            for t in 0..reps {
                let shift = 1u64 << (sub * t);
                for &(c, e) in inner.terms() {
                    let coeff = spec.mul(*pre, spec.pow_u(c, shift));
                    terms.push((coeff, reduce_exponent(spec, e as u64 * shift)));
                }
            }
            UnivariatePoly::new(&terms)
        }
    }
}

// ---------------------------------------------------------------------------
// Representative ordering.
// ---------------------------------------------------------------------------

/// Sort key for choosing the displayed representative: fewest monomials,
/// then smallest exponent list, then simplest coefficients, with the family
/// name, parameters, and table hash as deterministic tie-breakers.
pub type SimplKey = (usize, Vec<u32>, Vec<u64>, String, Vec<(String, u64)>, String);

pub fn simplicity_key(spec: &FieldSpec, inst: &FamilyInstance) -> SimplKey {
    (
        inst.form.monomial_count(),
        inst.form.exponents(),
        inst.form.coeff_complexities(spec),
        inst.family.cli_name().to_string(),
        inst.params.clone(),
        hex32(&inst.function.content_hash()),
    )
}

fn instance_desc(spec: &FieldSpec, inst: &FamilyInstance) -> String {
    let params: Vec<String> = inst.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}[{}] {}", inst.family.cli_name(), params.join(","), inst.form.render(spec))
}

// ---------------------------------------------------------------------------
// Run configuration.
// ---------------------------------------------------------------------------

fn default_format() -> String {
    "markdown".into()
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub mode: String,
    #[serde(default)]
    pub count: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Everything that determines a classification run. Identical configs give
/// byte-identical tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u32,
    #[serde(default)]
    pub modulus: Option<u32>,
    /// Family names to enumerate, in order; all fourteen when omitted.
    #[serde(default)]
    pub families: Option<Vec<String>>,
    #[serde(default)]
    pub strategies: BTreeMap<String, StrategyConfig>,
    /// Node budget per equivalence search; a dimension-dependent default
    /// when omitted.
    #[serde(default)]
    pub budget: Option<u64>,
    /// Compute rank invariants only up to this dimension; off when omitted.
    #[serde(default)]
    pub rank_cap: Option<u32>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl RunConfig {
    /// Standard run for one dimension: every family, exhaustive sweeps
    /// except the one quadratic bivariate family whose parameter space at
    /// n = 10 is only sampled.
    pub fn preset(n: u32) -> RunConfig {
        let mut strategies = BTreeMap::new();
        if n == 10 {
            strategies.insert(
                "f11".to_string(),
                StrategyConfig { mode: "sampled".into(), count: Some(500), seed: None },
            );
        }
        RunConfig {
            n,
            modulus: None,
            families: None,
            strategies,
            budget: None,
            rank_cap: None,
            cache: None,
            format: default_format(),
            seed: default_seed(),
        }
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, AtlasError> {
        toml::from_str(text).map_err(|e| AtlasError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn search_budget(&self) -> u64 {
        self.budget.unwrap_or(match self.n {
            0..=8 => 10_000_000,
            9 => 20_000_000,
            _ => 200_000_000,
        })
    }

    fn family_list(&self) -> Result<Vec<FamilyId>, AtlasError> {
        match &self.families {
            None => Ok(FamilyId::ALL.to_vec()),
            Some(names) => names
                .iter()
                .map(|s| {
                    FamilyId::from_cli_name(s)
                        .ok_or_else(|| AtlasError::Config(format!("unknown family {s:?}")))
                })
                .collect(),
        }
    }

    fn strategy_for(&self, fam: FamilyId) -> Result<EnumStrategy, AtlasError> {
        match self.strategies.get(fam.cli_name()) {
            None => Ok(EnumStrategy::Exhaustive),
            Some(sc) => match sc.mode.as_str() {
                "exhaustive" => Ok(EnumStrategy::Exhaustive),
                "sampled" => {
                    let count = sc.count.ok_or_else(|| {
                        AtlasError::Config(format!("sampled strategy for {} needs a count", fam))
                    })?;
                    Ok(EnumStrategy::Sampled { count, seed: sc.seed.unwrap_or(self.seed) })
                }
                other => Err(AtlasError::Config(format!("unknown strategy mode {other:?}"))),
            },
        }
    }

    fn bundle_options(&self) -> BundleOptions {
        BundleOptions {
            with_ranks: self.rank_cap.is_some_and(|cap| self.n <= cap),
            rank_cap: self.rank_cap.unwrap_or(DEFAULT_RANK_CAP),
        }
    }
}

// ---------------------------------------------------------------------------
// Verdict and invariant cache.
// ---------------------------------------------------------------------------

// Externally tagged on purpose: the invariant bundles contain integer-keyed
// maps, which the buffering used for internal tags cannot round-trip.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CacheLine {
    Bundle { hash: String, n: u32, bundle: crate::analysis::InvariantBundle },
    Verdict { pattern: String, target: String, budget: u64, verdict: Verdict },
}

/// Append-only JSONL store for invariant bundles and search verdicts, keyed
/// by table content hashes. A corrupt tail is dropped with a warning and the
/// retained prefix is rewritten on the next flush; equivalence witnesses
/// read from the cache are re-verified before use.
pub struct Cache {
    path: Option<PathBuf>,
    bundles: HashMap<String, crate::analysis::InvariantBundle>,
    verdicts: HashMap<(String, String), (u64, Verdict)>,
    good_lines: Vec<String>,
    pending: Vec<String>,
    rewrite: bool,
}

impl Cache {
    pub fn open(path: Option<&Path>) -> Result<Cache, AtlasError> {
        let mut cache = Cache {
            path: path.map(Path::to_path_buf),
            bundles: HashMap::new(),
            verdicts: HashMap::new(),
            good_lines: Vec::new(),
            pending: Vec::new(),
            rewrite: false,
        };
        let Some(p) = path else { return Ok(cache) };
        let text = match fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e.into()),
        };
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<CacheLine>(line) {
                Ok(entry) => {
                    cache.absorb(entry);
                    cache.good_lines.push((*line).to_string());
                }
                Err(e) => {
                    eprintln!(
                        "warning: cache {}: dropping {} entries from line {} on: {e}",
                        p.display(),
                        lines.len() - i,
                        i + 1
                    );
                    cache.rewrite = true;
                    break;
                }
            }
        }
        Ok(cache)
    }

    fn absorb(&mut self, entry: CacheLine) {
        match entry {
            CacheLine::Bundle { hash, bundle, .. } => {
                self.bundles.insert(hash, bundle);
            }
            CacheLine::Verdict { pattern, target, budget, verdict } => {
                self.verdicts.insert((pattern, target), (budget, verdict));
            }
        }
    }

    fn push_line(&mut self, line: CacheLine) {
        let text = serde_json::to_string(&line).expect("cache line serializes");
        self.absorb(serde_json::from_str(&text).expect("round trip"));
        self.pending.push(text);
    }

    pub fn bundle(&mut self, f: &Vbf, opts: &BundleOptions) -> crate::analysis::InvariantBundle {
        let key = hex32(&f.content_hash());
        if let Some(b) = self.bundles.get(&key) {
            if !opts.with_ranks || b.gamma_rank.is_some() {
                return b.clone();
            }
        }
        let bundle = crate::analysis::invariant_bundle(f, opts);
        self.push_line(CacheLine::Bundle { hash: key, n: f.n(), bundle: bundle.clone() });
        bundle
    }

    fn verdict(&self, pattern: &str, target: &str) -> Option<&(u64, Verdict)> {
        self.verdicts.get(&(pattern.to_string(), target.to_string()))
    }

    fn put_verdict(&mut self, pattern: String, target: String, budget: u64, verdict: &Verdict) {
        self.push_line(CacheLine::Verdict { pattern, target, budget, verdict: verdict.clone() });
    }

    pub fn flush(&mut self) -> Result<(), AtlasError> {
        let Some(p) = &self.path else {
            self.pending.clear();
            return Ok(());
        };
        if self.rewrite {
            let mut out = fs::File::create(p)?;
            for line in self.good_lines.iter().chain(self.pending.iter()) {
                writeln!(out, "{line}")?;
            }
            self.rewrite = false;
        } else if !self.pending.is_empty() {
            let mut out = fs::OpenOptions::new().create(true).append(true).open(p)?;
            for line in &self.pending {
                writeln!(out, "{line}")?;
            }
        }
        self.good_lines.extend(self.pending.drain(..));
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Output table.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnRef {
    pub hash: String,
    pub desc: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// "merge", "separation", "undecided", or "member-sample".
    pub kind: String,
    pub pattern: FnRef,
    pub target: FnRef,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndecidedPair {
    pub left: FnRef,
    pub right: FnRef,
    pub budget_spent: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub family: String,
    pub label: String,
    pub params: Vec<(String, u64)>,
    pub form: String,
    pub function: crate::vbf::VbfRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: String,
    pub representative: RepRecord,
    pub member_count: u64,
    pub contributing_families: Vec<String>,
    pub profile: InvariantProfile,
    pub verdict_audit: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub families: Vec<String>,
    pub strategies: BTreeMap<String, EnumStrategy>,
    pub budget: u64,
    pub rank_cap: Option<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTable {
    pub n: u32,
    pub modulus: String,
    pub class_count: usize,
    pub records: Vec<ClassRecord>,
    pub undecided_pairs: Vec<UndecidedPair>,
    pub enumeration: BTreeMap<String, EnumStats>,
    pub run: RunEcho,
}

/// A witness kept for the final replay pass, with both tables it connects.
pub struct ReplayProof {
    pub pattern: Vbf,
    pub target: Vbf,
    pub witness: Witness,
    pub context: String,
}

pub struct Classification {
    pub table: ClassTable,
    pub proofs: Vec<ReplayProof>,
}

// ---------------------------------------------------------------------------
// The pipeline.
// ---------------------------------------------------------------------------

const SAMPLE_WITNESSES_PER_ORBIT: usize = 3;

struct OrbitBuild {
    rep_fn: Vbf,
    rep_desc: String,
    rep_power: Option<u64>,
    members: u64,
    families: BTreeSet<String>,
    simplest: (SimplKey, FamilyInstance),
    samples: Vec<(Vbf, String, Witness)>,
    profile: Option<InvariantProfile>,
    /// Transform mapping the representative onto the canonical form; chained
    /// with a member's own transform it certifies orbit membership.
    to_canon: MonoFrob,
}

/// Budget for the quick try against each stored anchor before falling back
/// to a full search against the class representative.
const ANCHOR_PROBE_BUDGET: u64 = 50_000;
const MAX_ANCHORS: usize = 8;

/// A merged member kept around as a cheap probe target: orbits shaped like a
/// known member usually match it in a few thousand nodes, and the member's
/// stored witness lifts the match to the class representative.
struct Anchor {
    side: QuadSide,
    /// Witness mapping the class representative onto this anchor's function.
    from_class: EaTriple,
}

struct ClassBuild {
    rep_fn: Vbf,
    rep_desc: String,
    rep_power: Option<u64>,
    profile: InvariantProfile,
    orbit_ids: Vec<usize>,
    audits: Vec<AuditEntry>,
    pattern_side: Option<QuadSide>,
    anchors: Vec<Anchor>,
}

fn fn_ref(f: &Vbf, desc: &str) -> FnRef {
    FnRef { hash: hex32(&f.content_hash()), desc: desc.to_string() }
}

fn profile_of(
    cache: &mut Cache,
    f: &Vbf,
    power: Option<u64>,
    opts: &BundleOptions,
) -> InvariantProfile {
    InvariantProfile {
        bundle: cache.bundle(f, opts),
        power_exponent: power.map(|d| cyclo_canonical(d, f.n())),
        quadratic: f.is_quadratic(),
    }
}

/// Decide one class-representative/orbit-representative pair. Returns the
/// verdict and whether pattern and target were swapped to anchor the search
/// on a monomial side.
///
/// Quadratic pairs first probe the class's anchors — recently merged members
/// — at a small budget; a hit composes the member witness with the anchor's
/// own into a class-level witness. Only orbits shaped unlike every anchor
/// pay for a full search against the class representative, and when such a
/// search merges, the orbit joins the anchor pool.
fn decide_pair(
    spec: &FieldSpec,
    class: &mut ClassBuild,
    orbit: &OrbitBuild,
    orbit_side: &mut Option<QuadSide>,
    budget: u64,
    cache: &mut Cache,
) -> Result<(bool, Verdict), AtlasError> {
    let op = orbit.profile.as_ref().expect("profile computed in phase two");
    let cp = &class.profile;
    if let (Some(dc), Some(dt)) = (class.rep_power, orbit.rep_power) {
        return Ok((false, power_power_decide(spec, dc, dt)?));
    }
    let quad_vs_power = (cp.quadratic && !op.quadratic && orbit.rep_power.is_some())
        || (op.quadratic && !cp.quadratic && class.rep_power.is_some());
    if quad_vs_power {
        return Ok((false, Verdict::Inequivalent(Separator::QuadraticVersusNonquadraticPower)));
    }
    if !(cp.quadratic && op.quadratic) {
        return Ok((false, Verdict::Undecided { budget_spent: 0 }));
    }
    let swap = orbit.rep_power.is_some() && class.rep_power.is_none();
    let (pat, tar) = if swap { (&orbit.rep_fn, &class.rep_fn) } else { (&class.rep_fn, &orbit.rep_fn) };
    let (ph, th) = (hex32(&pat.content_hash()), hex32(&tar.content_hash()));
    if let Some((b, v)) = cache.verdict(&ph, &th).cloned() {
        let usable = match &v {
            Verdict::Equivalent(w) => {
                if w.verify(pat, tar) {
                    true
                } else {
                    eprintln!("warning: cached witness for {ph}/{th} fails verification, recomputing");
                    false
                }
            }
            Verdict::Inequivalent(_) => true,
            Verdict::Undecided { .. } => b >= budget,
        };
        if usable {
            return Ok((swap, v));
        }
    }
    if orbit_side.is_none() {
        *orbit_side = Some(QuadSide::prepare(&orbit.rep_fn)?);
    }
    if !swap {
        let probe = budget.min(ANCHOR_PROBE_BUDGET);
        let oside = orbit_side.as_ref().expect("prepared above");
        let mut hit = None;
        for idx in (0..class.anchors.len()).rev() {
            match ea_search_quadratic(&class.anchors[idx].side, oside, probe)? {
                Verdict::Equivalent(Witness::Ea(t)) => {
                    let w = Witness::Ea(compose_ea(&class.anchors[idx].from_class, &t));
                    debug_assert!(w.verify(&class.rep_fn, &orbit.rep_fn));
                    hit = Some((idx, Verdict::Equivalent(w)));
                    break;
                }
                Verdict::Equivalent(_) => unreachable!("quadratic search emits affine triples"),
                // Inequivalence to a member settles the class too, but fall
                // through so the verdict carries class-level evidence.
                Verdict::Inequivalent(_) => break,
                Verdict::Undecided { .. } => {}
            }
        }
        if let Some((idx, v)) = hit {
            let used = class.anchors.remove(idx);
            class.anchors.push(used);
            cache.put_verdict(ph, th, budget, &v);
            return Ok((false, v));
        }
    }
    if class.pattern_side.is_none() {
        class.pattern_side = Some(QuadSide::prepare(&class.rep_fn)?);
    }
    let cside = class.pattern_side.as_ref().expect("prepared above");
    let oside = orbit_side.as_ref().expect("prepared above");
    let (ps, ts) = if swap { (oside, cside) } else { (cside, oside) };
    let verdict = ea_search_quadratic(ps, ts, budget)?;
    cache.put_verdict(ph, th, budget, &verdict);
    if !swap {
        if let Verdict::Equivalent(Witness::Ea(t)) = &verdict {
            if class.anchors.len() == MAX_ANCHORS {
                class.anchors.remove(0);
            }
            class
                .anchors
                .push(Anchor { side: orbit_side.take().expect("prepared above"), from_class: t.clone() });
        }
    }
    Ok((swap, verdict))
}

pub fn classify(config: &RunConfig) -> Result<Classification, AtlasError> {
    let spec = FieldSpec::new(config.n, config.modulus)?;
    let families = config.family_list()?;
    let budget = config.search_budget();
    let opts = config.bundle_options();
    let mut cache = Cache::open(config.cache.as_deref())?;

    // Phase 1: stream every instance into symbolic orbits. Equal canonical
    // keys come with closed-form transforms, so members never need a search.
    let mut orbits: Vec<OrbitBuild> = Vec::new();
    let mut key_index: BTreeMap<CanonKey, usize> = BTreeMap::new();
    let mut enumeration: BTreeMap<String, EnumStats> = BTreeMap::new();
    let mut strategies_echo: BTreeMap<String, EnumStrategy> = BTreeMap::new();
    for fam in &families {
        let strategy = config.strategy_for(*fam)?;
        strategies_echo.insert(fam.cli_name().to_string(), strategy.clone());
        let spec_ref = &spec;
        let orbits_ref = &mut orbits;
        let key_index_ref = &mut key_index;
        let stats = enumerate_with(&spec, *fam, &strategy, &mut |inst| {
            let poly = expand_form(spec_ref, &inst.form);
            if matches!(inst.form, SymbolicForm::TraceExpr { .. }) {
                debug_assert!(
                    (0..spec_ref.size()).all(|x| poly.eval(spec_ref, x as Elt)
                        == inst.function.lut()[x]),
                    "trace expansion must match the table"
                );
            }
            let (key, mf) = canonicalize(spec_ref, &poly);
            let skey = simplicity_key(spec_ref, &inst);
            match key_index_ref.get(&key).copied() {
                Some(oid) => {
                    let orbit = &mut orbits_ref[oid];
                    orbit.members += 1;
                    orbit.families.insert(inst.family.cli_name().to_string());
                    if orbit.samples.len() < SAMPLE_WITNESSES_PER_ORBIT {
                        let back = mf.invert(spec_ref);
                        let to_member = back.compose(spec_ref, &orbit.to_canon);
                        let w = Witness::Ea(to_member.to_triple(spec_ref));
                        debug_assert!(w.verify(&orbit.rep_fn, &inst.function));
                        orbit.samples.push((
                            inst.function.clone(),
                            instance_desc(spec_ref, &inst),
                            w,
                        ));
                    }
                    if skey < orbit.simplest.0 {
                        orbit.simplest = (skey, inst);
                    }
                }
                None => {
                    key_index_ref.insert(key, orbits_ref.len());
                    let rep_power =
                        poly.as_plain_power().map(|d| d as u64);
                    orbits_ref.push(OrbitBuild {
                        rep_fn: inst.function.clone(),
                        rep_desc: instance_desc(spec_ref, &inst),
                        rep_power,
                        members: 1,
                        families: BTreeSet::from([inst.family.cli_name().to_string()]),
                        simplest: (skey, inst),
                        samples: Vec::new(),
                        profile: None,
                        to_canon: mf,
                    });
                }
            }
        })?;
        progress(|| {
            format!(
                "n={} {}: emitted {}, orbits so far {}",
                config.n,
                fam.cli_name(),
                stats.emitted,
                orbits.len()
            )
        });
        enumeration.insert(fam.cli_name().to_string(), stats);
    }

    // Phase 2: one invariant profile per orbit representative.
    let profiling = std::time::Instant::now();
    for orbit in &mut orbits {
        orbit.profile = Some(profile_of(&mut cache, &orbit.rep_fn, orbit.rep_power, &opts));
    }
    progress(|| {
        format!("n={} profiles for {} orbits in {:.1?}", config.n, orbits.len(), profiling.elapsed())
    });

    // Phase 3: fold orbits into classes against each class representative,
    // in discovery order. Profile mismatches separate without a search;
    // everything else gets an exact decision or lands in undecided_pairs.
    let mut classes: Vec<ClassBuild> = Vec::new();
    let mut undecided: Vec<UndecidedPair> = Vec::new();
    let mut proofs: Vec<ReplayProof> = Vec::new();
    for oid in 0..orbits.len() {
        let orbit = &orbits[oid];
        let oref = fn_ref(&orbit.rep_fn, &orbit.rep_desc);
        let mut orbit_side: Option<QuadSide> = None;
        let mut trail: Vec<AuditEntry> = Vec::new();
        let mut placed: Option<usize> = None;
        for cid in 0..classes.len() {
            if profile_separator(&classes[cid].profile, orbit.profile.as_ref().unwrap()).is_some()
            {
                continue;
            }
            let deciding = std::time::Instant::now();
            let (swap, verdict) = decide_pair(
                &spec,
                &mut classes[cid],
                orbit,
                &mut orbit_side,
                budget,
                &mut cache,
            )?;
            let class = &classes[cid];
            progress(|| {
                let outcome = match &verdict {
                    Verdict::Equivalent(_) => "equivalent",
                    Verdict::Inequivalent(_) => "inequivalent",
                    Verdict::Undecided { .. } => "undecided",
                };
                format!(
                    "n={} orbit {}/{} vs class {}: {} in {:.1?}",
                    config.n,
                    oid + 1,
                    orbits.len(),
                    cid + 1,
                    outcome,
                    deciding.elapsed()
                )
            });
            let cref = fn_ref(&class.rep_fn, &class.rep_desc);
            let (pref, tref) =
                if swap { (oref.clone(), cref) } else { (cref, oref.clone()) };
            let (pat_fn, tar_fn) = if swap {
                (orbit.rep_fn.clone(), class.rep_fn.clone())
            } else {
                (class.rep_fn.clone(), orbit.rep_fn.clone())
            };
            match verdict {
                Verdict::Equivalent(ref w) => {
                    proofs.push(ReplayProof {
                        pattern: pat_fn,
                        target: tar_fn,
                        witness: w.clone(),
                        context: format!("merge {} into {}", pref.desc, tref.desc),
                    });
                    trail.push(AuditEntry {
                        kind: "merge".into(),
                        pattern: pref,
                        target: tref,
                        verdict,
                        note: None,
                    });
                    placed = Some(cid);
                    break;
                }
                Verdict::Inequivalent(_) => {
                    trail.push(AuditEntry {
                        kind: "separation".into(),
                        pattern: pref,
                        target: tref,
                        verdict,
                        note: None,
                    });
                }
                Verdict::Undecided { budget_spent } => {
                    undecided.push(UndecidedPair {
                        left: pref.clone(),
                        right: tref.clone(),
                        budget_spent,
                    });
                    trail.push(AuditEntry {
                        kind: "undecided".into(),
                        pattern: pref,
                        target: tref,
                        verdict,
                        note: Some("kept as a provisional separate class".into()),
                    });
                }
            }
        }
        match placed {
            Some(cid) => {
                classes[cid].orbit_ids.push(oid);
                classes[cid].audits.extend(trail);
            }
            None => classes.push(ClassBuild {
                rep_fn: orbit.rep_fn.clone(),
                rep_desc: orbit.rep_desc.clone(),
                rep_power: orbit.rep_power,
                profile: orbit.profile.clone().unwrap(),
                orbit_ids: vec![oid],
                audits: trail,
                // a side prepared while separating doubles as the new
                // class's own pattern side
                pattern_side: orbit_side.take(),
                anchors: Vec::new(),
            }),
        }
    }

    // Phase 4: order classes by the simplest member and build records.
    let mut order: Vec<(SimplKey, usize)> = classes
        .iter()
        .enumerate()
        .map(|(cid, c)| {
            let best = c
                .orbit_ids
                .iter()
                .map(|&oid| &orbits[oid].simplest.0)
                .min()
                .expect("classes are nonempty");
            (best.clone(), cid)
        })
        .collect();
    order.sort();
    let mut records = Vec::with_capacity(order.len());
    for (k, (_, cid)) in order.iter().enumerate() {
        let class = &classes[*cid];
        let display = &class
            .orbit_ids
            .iter()
            .map(|&oid| &orbits[oid].simplest)
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("classes are nonempty")
            .1;
        let display_power = match &display.form {
            SymbolicForm::Poly(p) => p.as_plain_power().map(|d| d as u64),
            SymbolicForm::TraceExpr { .. } => None,
        };
        let profile = profile_of(&mut cache, &display.function, display_power, &opts);
        let mut audits = class.audits.clone();
        let mut member_count = 0;
        let mut contributing: BTreeSet<String> = BTreeSet::new();
        for &oid in &class.orbit_ids {
            let orbit = &orbits[oid];
            member_count += orbit.members;
            for cli in &orbit.families {
                let fam = FamilyId::from_cli_name(cli).expect("stored names are valid");
                contributing.insert(fam.label().to_string());
            }
            for (member_fn, desc, w) in &orbit.samples {
                proofs.push(ReplayProof {
                    pattern: orbit.rep_fn.clone(),
                    target: member_fn.clone(),
                    witness: w.clone(),
                    context: format!("orbit member {desc}"),
                });
                audits.push(AuditEntry {
                    kind: "member-sample".into(),
                    pattern: fn_ref(&orbit.rep_fn, &orbit.rep_desc),
                    target: fn_ref(member_fn, desc),
                    verdict: Verdict::Equivalent(w.clone()),
                    note: Some("sampled member of the scaling/twist orbit".into()),
                });
            }
        }
        records.push(ClassRecord {
            id: format!("{}.{}", config.n, k + 1),
            representative: RepRecord {
                family: display.family.cli_name().to_string(),
                label: display.family.label().to_string(),
                params: display.params.clone(),
                form: display.form.render(&spec),
                function: display.function.to_record(),
            },
            member_count,
            contributing_families: contributing.into_iter().collect(),
            profile,
            verdict_audit: audits,
        });
    }

    // Phase 5: replay every stored witness before publishing anything.
    for proof in &proofs {
        if !proof.witness.verify(&proof.pattern, &proof.target) {
            return Err(AtlasError::AuditFailure(proof.context.clone()));
        }
    }
    cache.flush()?;

    let table = ClassTable {
        n: config.n,
        modulus: format!("0x{:x}", spec.modulus()),
        class_count: records.len(),
        records,
        undecided_pairs: undecided,
        enumeration,
        run: RunEcho {
            families: families.iter().map(|f| f.cli_name().to_string()).collect(),
            strategies: strategies_echo,
            budget,
            rank_cap: config.rank_cap,
            seed: config.seed,
        },
    };
    Ok(Classification { table, proofs })
}

// ---------------------------------------------------------------------------
// Emission.
// ---------------------------------------------------------------------------

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit(table: &ClassTable, format: &str) -> Result<String, AtlasError> {
    match format {
        "json" => Ok(serde_json::to_string_pretty(table).expect("table serializes")),
        "csv" => {
            let mut out = String::from("class_id,representative,families,member_count\n");
            for r in &table.records {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.id,
                    csv_field(&r.representative.form),
                    csv_field(&r.contributing_families.join(";")),
                    r.member_count
                ));
            }
            Ok(out)
        }
        "markdown" | "md" => {
            let mut out = String::new();
            out.push_str(&format!("# Inequivalent APN classes over GF(2^{})\n\n", table.n));
            out.push_str(&format!(
                "Modulus {}, {} classes, {} undecided pairs.\n",
                table.modulus,
                table.class_count,
                table.undecided_pairs.len()
            ));
            let sampled: Vec<String> = table
                .run
                .strategies
                .iter()
                .filter_map(|(fam, s)| match s {
                    EnumStrategy::Sampled { count, seed } => {
                        Some(format!("{fam} ({count} samples, seed {seed})"))
                    }
                    EnumStrategy::Exhaustive => None,
                })
                .collect();
            if !sampled.is_empty() {
                out.push_str(&format!(
                    "Coverage note: sampled enumeration for {}.\n",
                    sampled.join(", ")
                ));
            }
            out.push_str("\n| N° | Functions | Families |\n|---|---|---|\n");
            for r in &table.records {
                out.push_str(&format!(
                    "| {} | {} | {} |\n",
                    r.id,
                    r.representative.form,
                    r.contributing_families.join(", ")
                ));
            }
            Ok(out)
        }
        other => Err(AtlasError::UnsupportedFormat(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::enumerate;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn spec(n: u32) -> FieldSpec {
        FieldSpec::new(n, None).unwrap()
    }

    fn random_mf(spec: &FieldSpec, rng: &mut StdRng) -> MonoFrob {
        MonoFrob {
            v: rng.gen_range(1..spec.size()) as Elt,
            u: rng.gen_range(1..spec.size()) as Elt,
            ji: rng.gen_range(0..spec.n()),
            jo: rng.gen_range(0..spec.n()),
        }
    }

    #[test]
    fn transforms_compose_and_invert_as_a_group() {
        let s = spec(6);
        let f = Vbf::power(&s, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let t1 = random_mf(&s, &mut rng);
            let t2 = random_mf(&s, &mut rng);
            let composed = t2.compose(&s, &t1);
            assert_eq!(composed.apply(&f).lut(), t2.apply(&t1.apply(&f)).lut());
            assert_eq!(t1.invert(&s).compose(&s, &t1), MonoFrob::identity());
        }
    }

    #[test]
    fn symbolic_and_table_actions_agree() {
        let s = spec(7);
        let poly = UnivariatePoly::new(&[(1, 3), (s.alog(5), 9), (s.alog(44), 34)]);
        let f = Vbf::from_univariate(&s, &poly).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let t = random_mf(&s, &mut rng);
            let via_poly = Vbf::from_univariate(&s, &t.apply_poly(&s, &poly)).unwrap();
            assert_eq!(via_poly.lut(), t.apply(&f).lut());
        }
    }

    #[test]
    fn transform_triples_are_valid_witnesses() {
        let s = spec(6);
        let f = Vbf::power(&s, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..10 {
            let t = random_mf(&s, &mut rng);
            let g = t.apply(&f);
            assert!(Witness::Ea(t.to_triple(&s)).verify(&f, &g));
        }
    }

    #[test]
    fn trace_expansion_matches_tables() {
        for (fam, n) in [
            (FamilyId::F5, 7),
            (FamilyId::F5, 8),
            (FamilyId::F6, 6),
            (FamilyId::F7, 6),
            (FamilyId::F6, 9),
            (FamilyId::F7, 9),
        ] {
            let s = spec(n);
            let e = enumerate(&s, fam, &EnumStrategy::Exhaustive).unwrap();
            assert!(!e.instances.is_empty(), "{fam} at n={n} should be nonempty");
            for inst in &e.instances {
                let poly = expand_form(&s, &inst.form);
                for x in 0..s.size() {
                    assert_eq!(
                        poly.eval(&s, x as Elt),
                        inst.function.lut()[x],
                        "{fam} expansion diverges at n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_key_is_transform_invariant() {
        let s = spec(6);
        let mut rng = StdRng::seed_from_u64(17);
        let polys = [
            UnivariatePoly::new(&[(1, 6), (1, 9), (s.alog(7), 48)]),
            UnivariatePoly::new(&[(s.alog(1), 3), (s.alog(4), 24), (1, 17)]),
            UnivariatePoly::new(&[(1, 3)]),
        ];
        for poly in &polys {
            let (key, mf) = canonicalize(&s, poly);
            let f = Vbf::from_univariate(&s, poly).unwrap();
            assert!(Witness::Ea(mf.to_triple(&s)).verify(
                &f,
                &Vbf::from_univariate(&s, &mf.apply_poly(&s, poly)).unwrap()
            ));
            for _ in 0..25 {
                let t = random_mf(&s, &mut rng);
                let image = t.apply_poly(&s, poly);
                let (key2, mf2) = canonicalize(&s, &image);
                assert_eq!(key, key2, "orbit members must share the canonical key");
                // Chain the two certificates into member -> member.
                let g = Vbf::from_univariate(&s, &image).unwrap();
                let to_member = mf2.invert(&s).compose(&s, &mf);
                assert!(Witness::Ea(to_member.to_triple(&s)).verify(&f, &g));
            }
        }
        let (k3, _) = canonicalize(&s, &polys[0]);
        let (k5, _) = canonicalize(&s, &polys[1]);
        assert_ne!(k3, k5, "distinct orbits must get distinct keys");
    }

    #[test]
    fn monomial_keys_are_cyclotomic_minima() {
        for n in [6u32, 7, 8, 9] {
            let s = spec(n);
            for d in [3u64, 5, 9, 13, 57] {
                if d >= s.order() {
                    continue;
                }
                let poly = UnivariatePoly::new(&[(1, d as u32)]);
                let (key, _) = canonicalize(&s, &poly);
                assert_eq!(key.exps, vec![cyclo_canonical(d, n) as u32]);
                assert!(key.dlogs.is_empty());
            }
        }
    }

    #[test]
    fn trace_orbits_collapse_by_cube_class() {
        let s7 = spec(7);
        let e7 = enumerate(&s7, FamilyId::F5, &EnumStrategy::Exhaustive).unwrap();
        let keys7: BTreeSet<CanonKey> = e7
            .instances
            .iter()
            .map(|i| canonicalize(&s7, &expand_form(&s7, &i.form)).0)
            .collect();
        assert_eq!(keys7.len(), 1, "odd dimension collapses to one orbit");

        let s8 = spec(8);
        let e8 = enumerate(&s8, FamilyId::F5, &EnumStrategy::Exhaustive).unwrap();
        let keys8: BTreeSet<CanonKey> = e8
            .instances
            .iter()
            .map(|i| canonicalize(&s8, &expand_form(&s8, &i.form)).0)
            .collect();
        assert_eq!(keys8.len(), 2, "even dimension splits on cubes");
    }

    #[test]
    fn simplicity_prefers_fewer_terms_then_smaller_exponents() {
        let s = spec(6);
        let gold = enumerate(&s, FamilyId::Gold, &EnumStrategy::Exhaustive).unwrap();
        let f3 = enumerate(&s, FamilyId::F3, &EnumStrategy::Exhaustive).unwrap();
        let k_gold = simplicity_key(&s, &gold.instances[0]);
        let k_f3 = simplicity_key(&s, &f3.instances[0]);
        assert!(k_gold < k_f3, "a monomial beats a trinomial");
        let f5 = enumerate(&s, FamilyId::F6, &EnumStrategy::Exhaustive).unwrap();
        let k_f5 = simplicity_key(&s, &f5.instances[0]);
        assert!(k_gold < k_f5);
    }

    #[test]
    fn cache_drops_corrupt_tail_and_rewrites() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let s = spec(6);
        let f = Vbf::power(&s, 3).unwrap();
        let opts = BundleOptions::default();
        {
            let mut cache = Cache::open(Some(&path)).unwrap();
            cache.bundle(&f, &opts);
            cache.flush().unwrap();
        }
        // Corrupt the tail.
        {
            let mut file = fs::OpenOptions::new().append(true).open(&path).unwrap();
            writeln!(file, "{{ definitely not json").unwrap();
        }
        {
            let mut cache = Cache::open(Some(&path)).unwrap();
            assert!(cache.bundles.len() == 1, "good prefix survives");
            cache.flush().unwrap();
        }
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1, "flush rewrites without the corrupt tail");
        let reopened = Cache::open(Some(&path)).unwrap();
        assert_eq!(reopened.bundles.len(), 1);
    }

    fn restricted_config(n: u32, fams: &[&str]) -> RunConfig {
        let mut c = RunConfig::preset(n);
        c.families = Some(fams.iter().map(|s| s.to_string()).collect());
        c
    }

    #[test]
    fn classify_restricted_families_reproduces_small_dimension() {
        let config = restricted_config(6, &["gold", "kasami", "f3", "f8-10"]);
        let out = classify(&config).unwrap();
        let t = &out.table;
        assert_eq!(t.class_count, 3);
        assert!(t.undecided_pairs.is_empty());
        assert_eq!(t.records[0].id, "6.1");
        assert_eq!(t.records[0].representative.form, "x^3");
        assert!(t.records[0].contributing_families.contains(&"Gold".to_string()));
        assert!(t.records[0].contributing_families.contains(&"Kasami".to_string()));
        let total: u64 = t.records.iter().map(|r| r.member_count).sum();
        let enumerated: u64 = t.enumeration.values().map(|s| s.emitted).sum();
        assert_eq!(total, enumerated, "every emitted instance lands in a class");
        assert!(!out.proofs.is_empty());

        let again = classify(&config).unwrap();
        assert_eq!(
            emit(&out.table, "json").unwrap(),
            emit(&again.table, "json").unwrap(),
            "same config twice must be byte-identical"
        );
    }

    #[test]
    fn classify_is_modulus_independent_at_small_dimension() {
        let base = restricted_config(6, &["gold", "kasami", "f3"]);
        let out = classify(&base).unwrap();
        // Any other primitive modulus of degree 6.
        let mut alt = base.clone();
        let other = (65u32..128)
            .find(|&m| m != 0x43 && FieldSpec::new(6, Some(m)).is_ok())
            .expect("another valid modulus exists");
        alt.modulus = Some(other);
        let out2 = classify(&alt).unwrap();
        assert_eq!(out.table.class_count, out2.table.class_count);
        let spectra: Vec<_> =
            out.table.records.iter().map(|r| r.profile.bundle.diff_spectrum.clone()).collect();
        let spectra2: Vec<_> =
            out2.table.records.iter().map(|r| r.profile.bundle.diff_spectrum.clone()).collect();
        assert_eq!(spectra, spectra2);
    }

    #[test]
    fn classify_cold_and_warm_cache_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = restricted_config(6, &["gold", "kasami", "f3"]);
        config.cache = Some(dir.path().join("cache.jsonl"));
        let cold = classify(&config).unwrap();
        assert!(config.cache.as_ref().unwrap().exists());
        let warm = classify(&config).unwrap();
        assert_eq!(
            emit(&cold.table, "json").unwrap(),
            emit(&warm.table, "json").unwrap(),
            "warm cache must not change the table"
        );
    }

    #[test]
    fn tiny_budget_leaves_pairs_undecided() {
        // The trace-built family shares its class, and therefore its whole
        // invariant profile, with the trinomial family, so attaching its
        // orbit takes an actual search.
        let mut config = restricted_config(6, &["f3", "f5"]);
        config.budget = Some(1);
        let starved = classify(&config).unwrap();
        assert!(
            !starved.table.undecided_pairs.is_empty(),
            "a one-node budget cannot finish the cross-family search"
        );
        assert_eq!(starved.table.class_count, 3, "the unattached orbit stays provisional");

        config.budget = None;
        let full = classify(&config).unwrap();
        assert_eq!(full.table.class_count, 2, "the search closes the gap");
        assert!(full.table.undecided_pairs.is_empty());
        assert!(full
            .table
            .records
            .iter()
            .any(|r| r.verdict_audit.iter().any(|a| a.kind == "merge")));
    }

    #[test]
    fn emit_formats_cover_markdown_csv_json() {
        let config = restricted_config(6, &["gold", "kasami"]);
        let out = classify(&config).unwrap();
        let md = emit(&out.table, "markdown").unwrap();
        assert!(md.contains("| N° | Functions | Families |"));
        assert!(md.contains("| 6.1 | x^3 |"));
        let csv = emit(&out.table, "csv").unwrap();
        assert!(csv.starts_with("class_id,representative,families,member_count\n"));
        assert!(csv.contains("6.1,x^3,"));
        let json = emit(&out.table, "json").unwrap();
        let parsed: ClassTable = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, out.table);
        assert!(matches!(
            emit(&out.table, "xml"),
            Err(AtlasError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn presets_and_toml_round_trip() {
        for n in 6..=11 {
            let c = RunConfig::preset(n);
            assert!(c.family_list().is_ok());
            let back = RunConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back.n, c.n);
            assert_eq!(back.format, c.format);
            if n == 10 {
                assert!(matches!(
                    back.strategy_for(FamilyId::F11).unwrap(),
                    EnumStrategy::Sampled { count: 500, .. }
                ));
            }
        }
        assert!(RunConfig::from_toml("n = 6\nfamilies = [\"nope\"]")
            .unwrap()
            .family_list()
            .is_err());
        let bad_mode = RunConfig::from_toml(
            "n = 6\n[strategies.gold]\nmode = \"magic\"",
        )
        .unwrap();
        assert!(bad_mode.strategy_for(FamilyId::Gold).is_err());
    }
}

