mod selftest;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mhsc::arith::{is_prime, sieve_primes};
use mhsc::cache::{Cache, CACHE_ENV};
use mhsc::claims::{find_claim, list_claims, sweep_claims, verify_claim, Grid, VerificationRecord, TSV_HEADER};
use mhsc::discover::{run_discovery, Discovery, DiscoveryJob, DiscoveryReport, Target};
use mhsc::Error;
use num_bigint::BigUint;

const DEFAULT_CACHE: &str = "mhsc-cache.jsonl";
const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "mhsc", version, about = "Exact checks of multiple harmonic sum congruences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify one claim at one point
    Verify(VerifyArgs),
    /// Verify claims over a grid of primes, r and m
    Sweep(SweepArgs),
    /// Search for a Bernoulli expression by CRT and lattice reduction (the PSLQ step)
    Discover(DiscoverArgs),
    /// Run the oracle-equivalence and invariant suites, and audit the cache
    Selftest(SelftestArgs),
    /// List registered claim ids
    List,
}

#[derive(Args, Clone)]
struct Common {
    /// Residue cache (JSON lines); overrides $MHSC_CACHE
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Do not read or write a cache
    #[arg(long, conflicts_with = "cache")]
    no_cache: bool,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    claim: String,
    #[arg(long)]
    p: u64,
    /// Defaults to the claim's smallest r
    #[arg(long)]
    r: Option<u32>,
    /// Defaults to the claim's smallest m
    #[arg(long)]
    m: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated claim ids
    #[arg(long, value_delimiter = ',', required = true)]
    claims: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pmin: u64,
    #[arg(long, required_unless_present = "primes")]
    pmax: Option<u64>,
    /// Explicit comma-separated primes instead of --pmin/--pmax
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["pmin", "pmax"])]
    primes: Option<Vec<u64>>,
    /// Inclusive range a..b, or a single value
    #[arg(long, value_parser = parse_range::<u32>)]
    r: Option<(u32, u32)>,
    /// Inclusive range a..b, or a single value
    #[arg(long, value_parser = parse_range::<u64>)]
    m: Option<(u64, u64)>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DiscoverArgs {
    /// zhao, zhoucai<n> (odd n), r<n>, or t<n>_r<r>
    #[arg(long)]
    target: String,
    /// Total weight of the Bernoulli monomial basis (default: the target's own)
    #[arg(long)]
    weight: Option<u64>,
    /// m for r<n> targets
    #[arg(long, default_value_t = 1)]
    m: u64,
    /// Number of primes in the window
    #[arg(long, default_value_t = 30)]
    primes: usize,
    /// Largest accepted relation entry; accepts 1e12 style
    #[arg(long, value_parser = parse_height, default_value = "1e12")]
    height_bound: BigUint,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SelftestArgs {
    /// Smaller grids, well under a minute
    #[arg(long)]
    quick: bool,
    /// Term budget for the enumeration oracles
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[command(flatten)]
    common: Common,
}

/// Runtime settings shared by every subcommand.
struct Config {
    cache: Option<PathBuf>,
    format: Format,
}

impl Config {
    fn from_common(c: &Common) -> Result<Self, String> {
        if let Some(n) = c.jobs {
            if n == 0 {
                return Err("--jobs must be at least 1".into());
            }
            // Only fails if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        let cache = if c.no_cache {
            None
        } else {
            Some(
                c.cache
                    .clone()
                    .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE)),
            )
        };
        Ok(Config { cache, format: c.format })
    }

    fn open_cache(&self) -> Result<Option<Cache>, String> {
        self.cache.as_ref().map(|p| Cache::open(p).map_err(|e| e.to_string())).transpose()
    }
}

fn parse_range<T: FromStr + PartialOrd + Copy>(s: &str) -> Result<(T, T), String> {
    let one = |t: &str| t.trim().parse::<T>().map_err(|_| format!("`{t}` is not a number"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (one(a)?, one(b.trim_start_matches('='))?),
        None => {
            let a = one(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn parse_height(s: &str) -> Result<BigUint, String> {
    let bad = || format!("`{s}` is not a positive integer or <digits>e<exponent>");
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<u32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let mant: BigUint = mant.parse().map_err(|_| bad())?;
    Ok(mant * BigUint::from(10u32).pow(exp))
}

fn render(records: &[VerificationRecord], format: Format) -> String {
    let mut out = String::new();
    if format == Format::Tsv {
        out.push_str(TSV_HEADER);
        out.push('\n');
    }
    for rec in records {
        let row = rec.row();
        out.push_str(&if format == Format::Tsv { row.tsv() } else { row.json() });
        out.push('\n');
    }
    out
}

fn exit_for(records: &[VerificationRecord]) -> ExitCode {
    if mhsc::claims::all_pass(records) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn run_verify(a: VerifyArgs) -> ExitCode {
    let cfg = match Config::from_common(&a.common) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let claim = match find_claim(&a.claim) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let r = a.r.unwrap_or_else(|| claim.domain.r.map_or(0, |(lo, _)| lo));
    let m = a.m.unwrap_or_else(|| claim.domain.m.map_or(0, |(lo, _)| lo));
    if let Err(why) = claim.domain.check(a.p, r, m) {
        return usage(format!("{}: {why}", claim.id));
    }
    let cache = match cfg.open_cache() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let rec = match cache.as_ref().and_then(|c| c.record(claim.id, a.p, r, m)) {
        Some(hit) => hit,
        None => {
            let rec = verify_claim(claim, a.p, r, m);
            if let Some(c) = &cache {
                c.put_record(&rec);
                if let Err(e) = c.flush() {
                    eprintln!("warning: {e}");
                }
            }
            rec
        }
    };
    let recs = [rec];
    print!("{}", render(&recs, cfg.format));
    exit_for(&recs)
}

fn run_sweep(a: SweepArgs) -> ExitCode {
    let cfg = match Config::from_common(&a.common) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let primes = match &a.primes {
        Some(list) => {
            if let Some(bad) = list.iter().find(|&&p| !is_prime(p)) {
                return usage(Error::NotPrime(*bad));
            }
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            list
        }
        None => {
            let hi = a.pmax.expect("clap requires --pmax without --primes");
            sieve_primes(hi).into_iter().filter(|&p| p >= a.pmin).collect()
        }
    };
    let ids: Vec<&str> = a.claims.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = ids.iter().find(|id| find_claim(id).is_err()) {
        return usage(Error::UnknownClaim(bad.to_string()));
    }
    let cache = match cfg.open_cache() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let grid = Grid { primes, r: a.r, m: a.m };
    let records = match sweep_claims(&ids, &grid, cache.as_ref()) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let report = render(&records, cfg.format);
    match &a.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, report) {
                return usage(format!("{}: {e}", path.display()));
            }
        }
        None => {
            let _ = std::io::stdout().write_all(report.as_bytes());
        }
    }
    exit_for(&records)
}

fn discover_text(rep: &DiscoveryReport, weight: u64) -> String {
    let mut s = String::new();
    let first = rep.primes.first().copied().unwrap_or(0);
    let last = rep.primes.last().copied().unwrap_or(0);
    let _ = writeln!(s, "target\t{}", rep.target);
    if rep.target.uses_m() {
        let _ = writeln!(s, "m\t{}", rep.m);
    }
    let _ = writeln!(s, "weight\t{weight}");
    let _ = writeln!(s, "primes\t{} ({first}..{last})", rep.primes.len());
    let route = if rep.normalized { "normalized" } else { "unnormalized" };
    let _ = writeln!(s, "window\tmod p^{} ({route})", rep.exponent);
    for b in &rep.basis {
        let _ = writeln!(s, "basis\t{b}\t{}", b.bernoulli_label());
    }
    match &rep.outcome {
        Discovery::Found(res) => {
            let bern = rep.bernoulli_coefficients().unwrap_or_default();
            let _ = writeln!(s, "result\tfound");
            let vec: Vec<String> = res.relation_vector.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "relation\t{}", vec.join(" "));
            for ((b, c), cb) in rep.basis.iter().zip(&res.coefficients).zip(&bern) {
                let _ = writeln!(s, "coefficient\t{b}\t{c}\t{}\t{cb}", b.bernoulli_label());
            }
            let ok = res.per_prime.iter().filter(|&&(_, v)| v).count();
            let _ = writeln!(s, "verified\t{ok}/{}", res.per_prime.len());
            for alt in &res.alternatives {
                let v: Vec<String> = alt.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "alternative\t{}", v.join(" "));
            }
            for rel in &res.basis_relations {
                let v: Vec<String> = rel.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "basis-relation\t{}", v.join(" "));
            }
        }
        Discovery::NoResult { height_bound, shortest } => {
            let _ = writeln!(s, "result\tnone");
            let _ = writeln!(s, "height-bound\t{height_bound}");
            if let Some(h) = shortest {
                let _ = writeln!(s, "shortest\t{h}");
            }
        }
    }
    s
}

fn discover_json(rep: &DiscoveryReport, weight: u64) -> String {
    let strs = |v: &[num_bigint::BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut obj = serde_json::json!({
        "target": rep.target.to_string(),
        "m": rep.m,
        "weight": weight,
        "primes": rep.primes,
        "exponent": rep.exponent,
        "normalized": rep.normalized,
        "basis": rep.basis.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
    });
    match &rep.outcome {
        Discovery::Found(res) => {
            obj["result"] = "found".into();
            obj["relation"] = strs(&res.relation_vector).into();
            obj["coefficients"] = res.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().into();
            obj["bernoulli_coefficients"] = rep
                .bernoulli_coefficients()
                .unwrap_or_default()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .into();
            obj["verified"] = res.verified.into();
            obj["alternatives"] = res.alternatives.iter().map(|a| strs(a)).collect::<Vec<_>>().into();
            obj["basis_relations"] = res.basis_relations.iter().map(|a| strs(a)).collect::<Vec<_>>().into();
        }
        Discovery::NoResult { height_bound, shortest } => {
            obj["result"] = "none".into();
            obj["height_bound"] = height_bound.to_string().into();
            obj["shortest"] = shortest.as_ref().map(|h| h.to_string()).into();
        }
    }
    format!("{obj}\n")
}

fn run_discover(a: DiscoverArgs) -> ExitCode {
    let cfg = match Config::from_common(&a.common) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let target: Target = match a.target.parse() {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let mut job = DiscoveryJob::new(target, a.primes);
    job.m = a.m;
    if let Some(w) = a.weight {
        job.weight = w;
    }
    job.height_bound = a.height_bound;
    let cache = match cfg.open_cache() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let rep = match run_discovery(&job, cache.as_ref()) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let out = match cfg.format {
        Format::Tsv => discover_text(&rep, job.weight),
        Format::Json => discover_json(&rep, job.weight),
    };
    print!("{out}");
    ExitCode::SUCCESS
}

fn run_selftest(a: SelftestArgs) -> ExitCode {
    let cfg = match Config::from_common(&a.common) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    // Only audit a cache that exists; the self-test never creates one.
    let cache = match cfg.cache.as_ref().filter(|p| p.exists()) {
        Some(p) => match Cache::open(p) {
            Ok(c) => Some(c),
            Err(e) => return usage(e),
        },
        None => None,
    };
    let suites = selftest::run(a.quick, a.budget, cache.as_ref());
    let mut ok = true;
    for s in &suites {
        if s.failures.is_empty() {
            println!("ok\t{}\t{} checks", s.name, s.checks);
        } else {
            ok = false;
            println!("FAIL\t{}\t{} of {} checks failed", s.name, s.failures.len(), s.checks);
            for f in s.failures.iter().take(5) {
                println!("\t{f}");
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_list() -> ExitCode {
    for c in list_claims() {
        let kind = if c.exploratory { "exploratory" } else { "claim" };
        println!("{}\t{kind}\t{}", c.id, c.description);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Discover(a) => run_discover(a),
        Command::Selftest(a) => run_selftest(a),
        Command::List => run_list(),
    }
}
