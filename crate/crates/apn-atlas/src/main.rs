//! Command line driver: field inspection, single-function analysis, family
//! sweeps, pairwise equivalence decisions, and full classification runs.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use apn_atlas::analysis::{invariant_bundle, is_ab, is_apn, BundleOptions, InvariantBundle};
use apn_atlas::atlas::{classify, emit, ClassTable, RunConfig};
use apn_atlas::equiv::{ccz_decide_with, default_budget, Verdict};
use apn_atlas::expr::parse_function;
use apn_atlas::families::{enumerate, EnumStrategy, FamilyId};
use apn_atlas::field::FieldSpec;

#[derive(Parser)]
#[command(
    name = "apn-atlas",
    version,
    about = "Construct, analyze and classify APN functions over GF(2^n)"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Show the arithmetic backing a dimension: modulus, generator, subfields
    Field(FieldArgs),
    /// Compute invariants of one function given as an expression
    Analyze(AnalyzeArgs),
    /// Sweep one family and report the enumeration funnel
    Enumerate(EnumerateArgs),
    /// Decide whether two functions are equivalent
    Compare(CompareArgs),
    /// Partition the known families into equivalence classes
    Classify(ClassifyArgs),
    /// Re-render a stored classification table
    Table(TableArgs),
}

#[derive(Args)]
struct DimArgs {
    /// Field dimension n of GF(2^n), between 2 and 16
    #[arg(long)]
    n: u32,
    /// Modulus bits of the reduction polynomial, e.g. 0x43; a fixed
    /// primitive default per dimension when omitted
    #[arg(long, value_parser = parse_modulus)]
    modulus: Option<u32>,
}

impl DimArgs {
    fn spec(&self) -> Result<FieldSpec, String> {
        FieldSpec::new(self.n, self.modulus).map_err(|e| e.to_string())
    }
}

fn parse_modulus(s: &str) -> Result<u32, String> {
    let v = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16)
    } else {
        s.parse()
    };
    v.map_err(|e| format!("bad modulus {s:?}: {e}"))
}

#[derive(Args)]
struct FieldArgs {
    #[command(flatten)]
    dim: DimArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    dim: DimArgs,
    /// The function, e.g. "x^3" or "x^3 + a^-1 tr(1; a^3 x^9)"
    #[arg(long)]
    f: String,
    /// Also compute the rank invariants (slow above small dimensions)
    #[arg(long)]
    ranks: bool,
    /// Fail with a nonzero exit unless the function is APN
    #[arg(long)]
    require_apn: bool,
    /// Output format: text or json
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    dim: DimArgs,
    /// Family name: gold, kasami, welch, niho, inverse, dobbertin,
    /// f1-2, f3, f4, f5, f6, f7, f8-10, f11
    #[arg(long)]
    family: String,
    /// Enumeration strategy: exhaustive or sampled
    #[arg(long, default_value = "exhaustive")]
    strategy: String,
    /// Number of draws for the sampled strategy
    #[arg(long)]
    count: Option<u64>,
    /// Seed for the sampled strategy
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print at most this many instances
    #[arg(long, default_value_t = 10)]
    limit: usize,
    /// Output format: text or json
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    dim: DimArgs,
    /// First function
    #[arg(long)]
    f: String,
    /// Second function
    #[arg(long)]
    g: String,
    /// Node budget for the equivalence search
    #[arg(long)]
    budget: Option<u64>,
    /// Output format: text or json
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Field dimension; required unless --config supplies one
    #[arg(long)]
    n: Option<u32>,
    /// Modulus bits of the reduction polynomial
    #[arg(long, value_parser = parse_modulus)]
    modulus: Option<u32>,
    /// "default" for the built-in preset, or a path to a TOML run config
    #[arg(long, default_value = "default")]
    config: String,
    /// Comma-separated family names, overriding the config
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Node budget per equivalence search, overriding the config
    #[arg(long)]
    budget: Option<u64>,
    /// Compute rank invariants up to this dimension, overriding the config
    #[arg(long)]
    rank_cap: Option<u32>,
    /// Verdict/invariant cache path; {out}/cache-n{N}.jsonl by default
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Disable the on-disk cache entirely
    #[arg(long)]
    no_cache: bool,
    /// Table format for stdout and the extra file: markdown, csv, or json
    #[arg(long)]
    format: Option<String>,
    /// Seed for sampled enumeration strategies
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the table and cache files
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    /// A table-n{N}.json file produced by classify
    #[arg(long)]
    input: PathBuf,
    /// Output format: markdown, csv, or json
    #[arg(long, default_value = "markdown")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Field(a) => cmd_field(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Enumerate(a) => cmd_enumerate(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Table(a) => cmd_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn modulus_poly(modulus: u32) -> String {
    let mut parts = Vec::new();
    for bit in (0..32).rev() {
        if modulus >> bit & 1 == 1 {
            parts.push(match bit {
                0 => "1".to_string(),
                1 => "x".to_string(),
                b => format!("x^{b}"),
            });
        }
    }
    parts.join(" + ")
}

fn cmd_field(args: FieldArgs) -> Result<(), String> {
    let spec = args.dim.spec()?;
    println!("GF(2^{})", spec.n());
    println!("  modulus   0x{:x} = {}", spec.modulus(), modulus_poly(spec.modulus()));
    println!("  elements  {}", spec.size());
    println!("  generator x (order {})", spec.order());
    let subs: Vec<String> = (1..spec.n())
        .filter(|k| spec.n() % k == 0)
        .map(|k| format!("GF(2^{k})"))
        .collect();
    println!(
        "  subfields {}",
        if subs.is_empty() { "none".to_string() } else { subs.join(", ") }
    );
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: u32,
    modulus: String,
    expr: String,
    apn: bool,
    almost_bent: bool,
    #[serde(flatten)]
    bundle: InvariantBundle,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), String> {
    let spec = args.dim.spec()?;
    let f = parse_function(&spec, &args.f).map_err(|e| e.to_string())?;
    let apn = is_apn(&f);
    if args.require_apn && !apn {
        return Err(format!("NotApnInput: {:?} is not APN over GF(2^{})", args.f, spec.n()));
    }
    let opts = BundleOptions { with_ranks: args.ranks, ..BundleOptions::default() };
    let bundle = invariant_bundle(&f, &opts);
    let report = AnalyzeReport {
        n: spec.n(),
        modulus: format!("0x{:x}", spec.modulus()),
        expr: args.f.clone(),
        apn,
        almost_bent: is_ab(&f),
        bundle,
    };
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        "text" => {
            println!("{} over GF(2^{}), modulus {}", args.f, report.n, report.modulus);
            println!("  degree          {}", report.bundle.degree);
            println!("  apn             {}", report.apn);
            println!("  almost bent     {}", report.almost_bent);
            println!("  diff spectrum   {:?}", report.bundle.diff_spectrum);
            println!("  |walsh| counts  {:?}", report.bundle.extended_walsh);
            if let Some(s) = &report.bundle.ortho_diff_spectrum {
                println!("  ortho diff      {s:?}");
            }
            if let Some(s) = &report.bundle.ortho_extended_walsh {
                println!("  ortho |walsh|   {s:?}");
            }
            if let Some(r) = report.bundle.gamma_rank {
                println!("  gamma rank      {r}");
            }
            if let Some(r) = report.bundle.delta_rank {
                println!("  delta rank      {r}");
            }
        }
        other => return Err(format!("unsupported format {other:?} (expected text or json)")),
    }
    Ok(())
}

#[derive(Serialize)]
struct EnumerateReport {
    family: String,
    n: u32,
    stats: apn_atlas::families::EnumStats,
    shown: usize,
    instances: Vec<InstanceReport>,
}

#[derive(Serialize)]
struct InstanceReport {
    params: Vec<(String, u64)>,
    form: String,
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<(), String> {
    let spec = args.dim.spec()?;
    let family = FamilyId::from_cli_name(&args.family)
        .ok_or_else(|| format!("unknown family {:?}", args.family))?;
    let strategy = match args.strategy.as_str() {
        "exhaustive" => EnumStrategy::Exhaustive,
        "sampled" => EnumStrategy::Sampled {
            count: args.count.ok_or("sampled strategy needs --count")?,
            seed: args.seed,
        },
        other => return Err(format!("unknown strategy {other:?}")),
    };
    let e = enumerate(&spec, family, &strategy).map_err(|e| e.to_string())?;
    let shown = e.instances.len().min(args.limit);
    let report = EnumerateReport {
        family: family.cli_name().to_string(),
        n: spec.n(),
        stats: e.stats,
        shown,
        instances: e.instances[..shown]
            .iter()
            .map(|i| InstanceReport { params: i.params.clone(), form: i.form.render(&spec) })
            .collect(),
    };
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        "text" => {
            println!(
                "{} over GF(2^{}): {} candidates, {} passed conditions, {} APN, {} distinct",
                family.label(),
                spec.n(),
                report.stats.candidates,
                report.stats.condition_passed,
                report.stats.apn_passed,
                report.stats.emitted
            );
            for inst in &report.instances {
                let params: Vec<String> =
                    inst.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("  [{}] {}", params.join(","), inst.form);
            }
            if report.stats.emitted as usize > shown {
                println!("  ... {} more", report.stats.emitted as usize - shown);
            }
        }
        other => return Err(format!("unsupported format {other:?} (expected text or json)")),
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), String> {
    let spec = args.dim.spec()?;
    let f = parse_function(&spec, &args.f).map_err(|e| e.to_string())?;
    let g = parse_function(&spec, &args.g).map_err(|e| e.to_string())?;
    let budget = args.budget.unwrap_or_else(|| default_budget(spec.n()));
    let verdict = ccz_decide_with(&f, &g, budget, &BundleOptions::default())
        .map_err(|e| e.to_string())?;
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&verdict).unwrap()),
        "text" => match &verdict {
            Verdict::Equivalent(w) => {
                println!("equivalent ({})", witness_kind(w));
            }
            Verdict::Inequivalent(sep) => println!("inequivalent ({sep:?})"),
            Verdict::Undecided { budget_spent } => {
                println!("undecided after {budget_spent} search nodes")
            }
        },
        other => return Err(format!("unsupported format {other:?} (expected text or json)")),
    }
    Ok(())
}

fn witness_kind(w: &apn_atlas::equiv::Witness) -> &'static str {
    match w {
        apn_atlas::equiv::Witness::Ea(_) => "explicit affine triple",
        apn_atlas::equiv::Witness::GraphInverse { .. } => "graph inverse plus twist",
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), String> {
    let mut config = match args.config.as_str() {
        "default" => {
            let n = args.n.ok_or("either --n or --config <file> is required")?;
            RunConfig::preset(n)
        }
        path => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            RunConfig::from_toml(&text).map_err(|e| e.to_string())?
        }
    };
    if let Some(n) = args.n {
        config.n = n;
    }
    if args.modulus.is_some() {
        config.modulus = args.modulus;
    }
    if args.families.is_some() {
        config.families = args.families;
    }
    if args.budget.is_some() {
        config.budget = args.budget;
    }
    if args.rank_cap.is_some() {
        config.rank_cap = args.rank_cap;
    }
    if let Some(f) = args.format {
        config.format = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    config.cache = if args.no_cache {
        None
    } else {
        Some(
            args.cache
                .or(config.cache)
                .unwrap_or_else(|| args.out.join(format!("cache-n{}.jsonl", config.n))),
        )
    };

    let out = classify(&config).map_err(|e| e.to_string())?;
    let table = &out.table;

    let json_path = args.out.join(format!("table-n{}.json", config.n));
    fs::write(&json_path, emit(table, "json").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut written = vec![json_path.display().to_string()];
    if config.format != "json" {
        let ext = match config.format.as_str() {
            "markdown" | "md" => "md",
            "csv" => "csv",
            other => return Err(format!("unsupported format {other:?}")),
        };
        let extra_path = args.out.join(format!("table-n{}.{ext}", config.n));
        fs::write(&extra_path, emit(table, &config.format).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        written.push(extra_path.display().to_string());
    }

    println!("{}", emit(table, "markdown").map_err(|e| e.to_string())?);
    println!("enumeration:");
    for (fam, stats) in &table.enumeration {
        println!(
            "  {fam}: {} candidates, {} conditions, {} apn, {} distinct",
            stats.candidates, stats.condition_passed, stats.apn_passed, stats.emitted
        );
    }
    println!("verified {} stored witnesses by replay", out.proofs.len());
    println!("wrote {}", written.join(", "));
    Ok(())
}

fn cmd_table(args: TableArgs) -> Result<(), String> {
    let text = fs::read_to_string(&args.input).map_err(|e| format!("{}: {e}", args.input.display()))?;
    let table: ClassTable =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", args.input.display()))?;
    print!("{}", emit(&table, &args.format).map_err(|e| e.to_string())?);
    Ok(())
}
