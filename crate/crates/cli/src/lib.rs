//! `ffil` experiment runner.
//!
//! One subcommand per experiment. Each run writes a JSON report
//! `{config, achieved, bound, verification, retries, timing}` and optionally
//! a CSV series. Only `timing` varies between runs with the same seed.
//!
//! Exit codes: 0 success, 1 usage or invalid parameters, 2 verification
//! failure, 3 resource cap or retry cap exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use ffil_core::bigraph::{
    self, find_induced_pattern, gen_forbidden_h, gen_pattern_pi, hypergraph_independent_set, BipartiteGraph,
    Hypergraph, Pattern,
};
use ffil_core::constructions::{
    point_variety_instance, random_algebraic_graph, unit_distance_instance, unit_distance_instance_for_prime,
    zero_count_experiment, EvasiveStrategy, UnitDistanceOptions, Verification,
};
use ffil_core::geometry::{
    self, flats_in_sphere_check, intersect_spheres_to_flat, isotropic_unit_pair_search, AffineFlat, BilinearForm,
    PointSet, Sphere,
};
use ffil_core::gf::FieldCtx;
use ffil_core::linalg::Vector;
use ffil_core::mpoly::{self, MultiPoly, Point};
use ffil_core::patterns::{self, PatternFamilyReport};
use ffil_core::{loglog_slope, par, rng, Error, DEFAULT_ENUM_CAP, DEFAULT_SEARCH_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ffil", version, about = "Finite-field incidence geometry experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Experiment seed; every random choice derives from it
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (0 = all cores, 1 = sequential)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Format printed on stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the CSV series to this file
    #[arg(long, global = true)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// Dump the constructed instance in fixture format
    #[arg(long, global = true)]
    #[serde(skip)]
    pub dump: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Random algebraic K_{s,s}-free bipartite graph
    #[command(after_help = "CSV columns: p,d1,d2,m,n,s,edges,target,verification,polynomial_retries,subsample_retries")]
    Zarankiewicz(ZarankiewiczArgs),
    /// Zero-patterns of a polynomial list (random or from a fixture)
    #[command(after_help = "CSV columns: subset,witness  (one row per pattern; entries space-separated, 0-based)")]
    ZeroPatterns(ZeroPatternArgs),
    /// Containment-pattern counts of a growing variety sequence
    #[command(after_help = "CSV columns: k,containment_patterns,zero_patterns")]
    ContainmentPatterns(ContainmentArgs),
    /// Shatter functions of the point-variety incidence system
    #[command(after_help = "CSV columns: k,pi_incidence,pi_patterns")]
    Shatter(ShatterArgs),
    /// Points against hypersurfaces from a random algebraic graph
    #[command(after_help = "CSV columns: p,D,D2,m,n,incidences,graph_edges,target,degenerate_sections,verification")]
    PointVariety(PointVarietyArgs),
    /// Unit-distance point sets U ∪ (U + x)
    #[command(after_help = "CSV columns: p,d,points,unit_distances,target,cross_pairs,verification,shift_retries")]
    UnitDistance(UnitDistanceArgs),
    /// Sphere-intersection, flats-in-sphere and isotropic-pair sweeps
    #[command(after_help = "CSV columns: family,k,flat_dim,identity_ok,orthogonal_ok  (flat_dim -1 = empty)")]
    SphereGeometry(SphereArgs),
    /// Induced-pattern absence scans (Π_{d+1} on point-sphere incidences, H_{d,Δ} on point-hyperplane incidences)
    #[command(after_help = "CSV columns: host,rows,cols,edges,found")]
    PatternScan(PatternScanArgs),
    /// Zero counts of uniform random polynomials
    #[command(after_help = "CSV columns: trial,zeros,success")]
    ZeroCount(ZeroCountArgs),
    /// Independent sets in random uniform hypergraphs
    #[command(after_help = "CSV columns: instance,n,k,m,bound,size,attempts,independent")]
    IndepSet(IndepSetArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ZarankiewiczArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    /// Defaults to p^d1
    #[arg(long)]
    pub m: Option<usize>,
    /// Defaults to p^d2
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults to d1 + d2
    #[arg(long)]
    pub s: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ZeroPatternArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub vars: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial list, one `p=..; vars=..; body` per line
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ContainmentArgs {
    #[arg(long, default_value_t = 7)]
    pub p: u64,
    #[arg(long, default_value_t = 3)]
    pub vars: usize,
    /// Largest sequence length; counts are reported for every prefix
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Defining polynomials per variety
    #[arg(long, default_value_t = 2)]
    pub polys_per: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Variety dimension used for the slope limit; defaults to vars − polys_per
    #[arg(long)]
    pub dim: Option<usize>,
    /// Variety list, one `p=..; vars=..; f1, f2, ..` per line
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShatterArgs {
    #[arg(long, default_value_t = 5)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub vars: usize,
    /// Number of varieties (ground set of the incidence system)
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub polys_per: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Random points forming the incidence system; defaults to all of F_p^vars
    #[arg(long)]
    pub points: Option<usize>,
    /// Largest subset size for the shatter function; defaults to k
    #[arg(long)]
    pub max_k: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PointVarietyArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Ambient dimension D of the points
    #[arg(long)]
    pub dim: usize,
    /// K_{s,s} order for the incidence graph; defaults to (D + D')²
    #[arg(long)]
    pub s: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    MapImage,
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct UnitDistanceArgs {
    #[arg(long)]
    pub d: usize,
    /// Target point count; picks p from n unless --p is given
    #[arg(long)]
    pub n: Option<usize>,
    /// Explicit primes ≡ 3 mod 4 (comma-separated) for a sweep
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<u64>,
    #[arg(long, default_value_t = 4)]
    pub s: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::MapImage)]
    pub strategy: StrategyArg,
    /// Biclique scan bound
    #[arg(long, default_value_t = 6)]
    pub scan_max: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SphereArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub families: usize,
    /// Largest family size
    #[arg(long, default_value_t = 4)]
    pub max_k: usize,
    /// Largest flat dimension searched inside the unit sphere; defaults to d − 1
    #[arg(long)]
    pub dim_cap: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    Pi,
    H,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PatternScanArgs {
    #[arg(long, value_enum)]
    pub kind: PatternKind,
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub d: usize,
    /// Degree for H_{d,Δ}; hosts exist for Δ = 1 only
    #[arg(long, default_value_t = 1)]
    pub delta: u32,
    /// Random sub-hosts to scan; 0 scans the full host
    #[arg(long, default_value_t = 0)]
    pub hosts: usize,
    /// Rows (points) per sub-host
    #[arg(long, default_value_t = 24)]
    pub host_rows: usize,
    /// Columns (spheres / hyperplanes) per sub-host
    #[arg(long, default_value_t = 24)]
    pub host_cols: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ZeroCountArgs {
    #[arg(long, default_value_t = 5)]
    pub p: u64,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 400)]
    pub trials: usize,
    /// Fraction below which the run counts as a verification failure
    #[arg(long, default_value_t = 0.70)]
    pub min_fraction: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IndepSetArgs {
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Edges per hypergraph
    #[arg(long, default_value_t = 100)]
    pub edges: usize,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Failed,
    Resource,
}

struct Outcome {
    config: Value,
    achieved: Value,
    bound: Value,
    verification: Value,
    retries: Value,
    status: Status,
    csv_header: &'static str,
    csv_rows: Vec<String>,
    dumps: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn new(config: Value, csv_header: &'static str) -> Self {
        Self {
            config,
            achieved: json!({}),
            bound: json!({}),
            verification: json!({}),
            retries: json!({}),
            status: Status::Ok,
            csv_header,
            csv_rows: Vec::new(),
            dumps: Vec::new(),
        }
    }

    fn fail_if(&mut self, cond: bool) {
        if cond && self.status == Status::Ok {
            self.status = Status::Failed;
        }
    }

    fn csv(&self) -> String {
        let mut s = String::from(self.csv_header);
        s.push('\n');
        for r in &self.csv_rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Value,
    achieved: &'a Value,
    bound: &'a Value,
    verification: &'a Value,
    retries: &'a Value,
    timing: Timing,
}

#[derive(Serialize)]
struct Timing {
    wall_ms: u128,
}

/// Parses `args` (including the program name) and runs one experiment.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let start = Instant::now();
    let result = par::with_jobs(cli.global.jobs, || execute(&cli));
    let wall_ms = start.elapsed().as_millis();
    match result {
        Ok(outcome) => emit(&cli.global, &outcome, wall_ms),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `ffil --help` for usage");
            EXIT_USAGE
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::Parse { .. } => EXIT_USAGE,
                Error::Resource(_) => EXIT_RESOURCE,
                Error::Construction { attempts, reason, best } => {
                    // still leave a report describing the best attempt
                    let mut o = Outcome::new(json!({ "command": command_name(&cli.command), "seed": cli.global.seed }), "");
                    o.achieved = json!({ "best_attempt": best });
                    o.verification = json!({ "construction": "failed", "reason": reason });
                    o.retries = json!({ "attempts": attempts });
                    o.status = Status::Resource;
                    emit(&cli.global, &o, wall_ms)
                }
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Zarankiewicz(_) => "zarankiewicz",
        Command::ZeroPatterns(_) => "zero-patterns",
        Command::ContainmentPatterns(_) => "containment-patterns",
        Command::Shatter(_) => "shatter",
        Command::PointVariety(_) => "point-variety",
        Command::UnitDistance(_) => "unit-distance",
        Command::SphereGeometry(_) => "sphere-geometry",
        Command::PatternScan(_) => "pattern-scan",
        Command::ZeroCount(_) => "zero-count",
        Command::IndepSet(_) => "indep-set",
    }
}

fn config<A: Serialize>(cli: &Cli, args: &A) -> Value {
    json!({
        "command": command_name(&cli.command),
        "seed": cli.global.seed,
        "jobs": cli.global.jobs,
        "format": cli.global.format,
        "args": args,
    })
}

fn emit(g: &Global, o: &Outcome, wall_ms: u128) -> i32 {
    let report = Report {
        config: &o.config,
        achieved: &o.achieved,
        bound: &o.bound,
        verification: &o.verification,
        retries: &o.retries,
        timing: Timing { wall_ms },
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let write = |path: &Path, body: &str| -> bool {
        match std::fs::write(path, body) {
            Ok(()) => true,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                false
            }
        }
    };
    let mut ok = true;
    match &g.out {
        Some(path) => ok &= write(path, &text),
        None if g.format == Format::Json => print!("{text}"),
        None => {}
    }
    if g.format == Format::Csv {
        print!("{}", o.csv());
    }
    if let Some(path) = &g.csv {
        ok &= write(path, &o.csv());
    }
    for (path, body) in &o.dumps {
        ok &= write(path, body);
    }
    if !ok {
        return EXIT_USAGE;
    }
    match o.status {
        Status::Ok => EXIT_OK,
        Status::Failed => EXIT_VERIFICATION,
        Status::Resource => EXIT_RESOURCE,
    }
}

fn execute(cli: &Cli) -> Run<Outcome> {
    let seed = cli.global.seed;
    let dump = cli.global.dump.as_deref();
    match &cli.command {
        Command::Zarankiewicz(a) => zarankiewicz(cli, a, seed, dump),
        Command::ZeroPatterns(a) => zero_patterns_cmd(cli, a, seed),
        Command::ContainmentPatterns(a) => containment_cmd(cli, a, seed),
        Command::Shatter(a) => shatter_cmd(cli, a, seed),
        Command::PointVariety(a) => point_variety_cmd(cli, a, seed, dump),
        Command::UnitDistance(a) => unit_distance_cmd(cli, a, seed, dump),
        Command::SphereGeometry(a) => sphere_cmd(cli, a, seed),
        Command::PatternScan(a) => pattern_scan_cmd(cli, a, seed),
        Command::ZeroCount(a) => zero_count_cmd(cli, a, seed),
        Command::IndepSet(a) => indep_set_cmd(cli, a, seed),
    }
}

fn verification_name(v: Verification) -> &'static str {
    match v {
        Verification::VerifiedFree => "verified-free",
        Verification::WitnessFound => "witness-found",
        Verification::SearchCapped => "search-capped",
    }
}

fn apply_verification(o: &mut Outcome, v: Verification) {
    match v {
        Verification::VerifiedFree => {}
        Verification::WitnessFound => o.fail_if(true),
        Verification::SearchCapped => {
            if o.status == Status::Ok {
                o.status = Status::Resource;
            }
        }
    }
}

fn pow_usize(p: u64, e: usize) -> Run<usize> {
    Ok(mpoly::domain_size(p, e, DEFAULT_ENUM_CAP)?)
}

fn zarankiewicz(cli: &Cli, a: &ZarankiewiczArgs, seed: u64, dump: Option<&Path>) -> Run<Outcome> {
    let mut r = a.clone();
    r.m = Some(a.m.map_or_else(|| pow_usize(a.p, a.d1), Ok)?);
    r.n = Some(a.n.map_or_else(|| pow_usize(a.p, a.d2), Ok)?);
    r.s = Some(a.s.unwrap_or(a.d1 + a.d2));
    let (m, n, s) = (r.m.unwrap(), r.n.unwrap(), r.s.unwrap());
    let mut o = Outcome::new(
        config(cli, &r),
        "p,d1,d2,m,n,s,edges,target,verification,polynomial_retries,subsample_retries",
    );
    let inst = random_algebraic_graph(a.p, a.d1, a.d2, m, n, Some(s), seed)?;
    let rep = &inst.report;
    o.achieved = json!({
        "edges": rep.achieved,
        "base_edges": inst.base_edges,
        "polynomial": inst.poly.to_string(),
        "metrics": rep.metrics,
        "warnings": rep.warnings,
    });
    o.bound = json!({ "target": rep.target, "kind": rep.bound_kind, "s_prescribed": rep.params.s_prescribed });
    o.verification = json!({
        "kss": verification_name(rep.verification),
        "s": s,
        "witness": rep.witness,
        "meets_target": rep.meets_target(),
    });
    o.retries = json!(rep.retries);
    o.fail_if(!rep.meets_target());
    apply_verification(&mut o, rep.verification);
    o.csv_rows.push(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        a.p,
        a.d1,
        a.d2,
        m,
        n,
        s,
        rep.achieved,
        rep.target,
        verification_name(rep.verification),
        rep.retries.polynomial,
        rep.retries.subsample
    ));
    if let Some(path) = dump {
        o.dumps.push((path.to_path_buf(), format!("{}\n", inst.poly)));
        o.dumps.push((path.with_extension("graph"), inst.graph.to_fixture()));
    }
    Ok(o)
}

fn read(path: &Path) -> Run<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn check_flag<T: PartialEq + std::fmt::Display>(name: &str, flag: Option<T>, actual: T) -> Run<()> {
    match flag {
        Some(v) if v != actual => Err(usage(format!("--{name} {v} disagrees with the fixture ({actual})"))),
        _ => Ok(()),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn zero_patterns_cmd(cli: &Cli, a: &ZeroPatternArgs, seed: u64) -> Run<Outcome> {
    let mut r = a.clone();
    let fs: Vec<MultiPoly> = match &a.fixture {
        Some(path) => {
            let fs = mpoly::parse_poly_list(&read(path)?)?;
            let first = fs.first().ok_or_else(|| usage("fixture holds no polynomials"))?;
            check_flag("p", a.p, first.ctx().p())?;
            check_flag("vars", a.vars, first.nvars())?;
            check_flag("k", a.k, fs.len())?;
            if let Some(deg) = a.degree {
                if patterns::max_degree(&fs) > deg {
                    return Err(usage(format!("fixture degree exceeds --degree {deg}")));
                }
            }
            r.p = Some(first.ctx().p());
            r.vars = Some(first.nvars());
            r.k = Some(fs.len());
            r.degree = Some(a.degree.unwrap_or(patterns::max_degree(&fs)));
            fs
        }
        None => {
            let (Some(p), Some(vars), Some(k), Some(deg)) = (a.p, a.vars, a.k, a.degree) else {
                return Err(usage("--p, --vars, --k and --degree are required without --fixture"));
            };
            let ctx = FieldCtx::prime(p)?;
            let mut g = rng::seeded(seed);
            (0..k).map(|_| MultiPoly::sample_uniform(ctx, vars, deg, &mut g)).collect::<Result<_, _>>()?
        }
    };
    let p = r.p.unwrap();
    let dim = r.vars.unwrap();
    let delta = patterns::max_degree(&fs);
    let fam = patterns::zero_patterns(&fs)?;
    let report = PatternFamilyReport::new(&fam, p, dim, delta);
    let witnesses: Vec<Point> = fam.patterns.values().cloned().collect();
    let rank_full = patterns::witness_rank_check(&fs, &witnesses)?;
    let replay = fam.verify_zero(&fs);
    let rbg_ok = report.pattern_count as u128 <= report.bound_rbg;
    let mut o = Outcome::new(config(cli, &r), "subset,witness");
    o.verification = json!({
        "bound_rbg_holds": rbg_ok,
        "bound_kdelta_holds": report.pattern_count as u128 <= report.bound_kdelta,
        "witness_rank_full": rank_full,
        "witnesses_replay": replay,
    });
    o.bound = json!({ "bound_rbg": report.bound_rbg, "bound_kdelta": report.bound_kdelta });
    o.csv_rows = report.patterns.iter().map(|e| format!("{},{}", join(&e.subset), join(&e.witness))).collect();
    o.achieved = json!({
        "polynomials": fs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "family": report,
    });
    o.fail_if(!rbg_ok || !rank_full || !replay);
    Ok(o)
}

fn load_or_sample_varieties(
    fixture: Option<&Path>,
    p: u64,
    vars: usize,
    k: usize,
    per: usize,
    degree: u32,
    seed: u64,
) -> Run<Vec<Vec<MultiPoly>>> {
    match fixture {
        Some(path) => {
            let vs = mpoly::parse_system_list(&read(path)?)?;
            if vs.is_empty() {
                return Err(usage("fixture holds no varieties"));
            }
            Ok(vs)
        }
        None => {
            let ctx = FieldCtx::prime(p)?;
            let mut g = rng::seeded(seed);
            Ok(patterns::random_variety_systems(ctx, vars, k, per, degree, &mut g)?)
        }
    }
}

fn containment_cmd(cli: &Cli, a: &ContainmentArgs, seed: u64) -> Run<Outcome> {
    let mut r = a.clone();
    let vs = load_or_sample_varieties(a.fixture.as_deref(), a.p, a.vars, a.k, a.polys_per, a.degree, seed)?;
    if a.fixture.is_some() {
        let f = &vs[0][0];
        r.p = f.ctx().p();
        r.vars = f.nvars();
        r.k = vs.len();
    }
    let dim = a.dim.unwrap_or(r.vars.saturating_sub(a.polys_per));
    r.dim = Some(dim);
    let mut o = Outcome::new(config(cli, &r), "k,containment_patterns,zero_patterns");
    let mut counts = Vec::new();
    let mut zero_counts = Vec::new();
    for j in 1..=vs.len() {
        let prefix = &vs[..j];
        let c = patterns::containment_patterns(prefix)?;
        let all: Vec<MultiPoly> = prefix.iter().flatten().cloned().collect();
        let z = patterns::zero_patterns(&all)?;
        counts.push(c.len());
        zero_counts.push(z.len());
        o.csv_rows.push(format!("{j},{},{}", c.len(), z.len()));
    }
    let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
    let dominated = counts.iter().zip(&zero_counts).all(|(c, z)| c <= z);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        counts.iter().enumerate().skip(1).map(|(i, &c)| ((i + 1) as f64, c as f64)).unzip();
    let slope = if xs.len() >= 2 { Some(loglog_slope(&xs, &ys)) } else { None };
    let limit = dim as f64 + 1.5;
    o.achieved = json!({ "containment_counts": counts, "zero_pattern_counts": zero_counts, "slope": slope });
    o.bound = json!({ "slope_limit": limit });
    o.verification = json!({
        "monotone": monotone,
        "containment_le_zero_patterns": dominated,
        "slope_within_limit": slope.is_none_or(|s| s <= limit),
    });
    o.fail_if(!monotone || !dominated || slope.is_some_and(|s| s > limit));
    Ok(o)
}

fn shatter_cmd(cli: &Cli, a: &ShatterArgs, seed: u64) -> Run<Outcome> {
    let mut r = a.clone();
    let vs = load_or_sample_varieties(None, a.p, a.vars, a.k, a.polys_per, a.degree, seed)?;
    let all = mpoly::all_points(a.p, a.vars, DEFAULT_ENUM_CAP)?;
    let points: Vec<Point> = match a.points {
        Some(n) if n < all.len() => {
            let mut g = rng::trial(seed, 1);
            let mut idx = index::sample(&mut g, all.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i].clone()).collect()
        }
        _ => all,
    };
    r.points = Some(points.len());
    let max_k = a.max_k.unwrap_or(a.k).min(a.k);
    r.max_k = Some(max_k);
    let f1 = patterns::incidence_set_system(&points, &vs);
    let f = patterns::containment_patterns(&vs)?.to_set_system();
    let mut o = Outcome::new(config(cli, &r), "k,pi_incidence,pi_patterns");
    let mut pi1 = Vec::new();
    let mut pif = Vec::new();
    for j in 1..=max_k {
        let x = patterns::shatter_function(&f1, j)?;
        let y = patterns::shatter_function(&f, j)?;
        o.csv_rows.push(format!("{j},{x},{y}"));
        pi1.push(x);
        pif.push(y);
    }
    let ok = pi1.iter().zip(&pif).all(|(x, y)| x <= y);
    o.achieved = json!({ "pi_incidence": pi1, "pi_patterns": pif, "incidence_members": f1.members.len(), "pattern_members": f.members.len() });
    o.bound = json!({ "pi_patterns": pif });
    o.verification = json!({ "incidence_below_patterns": ok });
    o.fail_if(!ok);
    Ok(o)
}

fn point_variety_cmd(cli: &Cli, a: &PointVarietyArgs, seed: u64, dump: Option<&Path>) -> Run<Outcome> {
    let inst = point_variety_instance(a.m, a.alpha, a.dim, a.s, seed)?;
    let rep = &inst.report;
    let mut r = a.clone();
    r.s = rep.params.s_verified;
    let mut o = Outcome::new(
        config(cli, &r),
        "p,D,D2,m,n,incidences,graph_edges,target,degenerate_sections,verification",
    );
    let containment = inst.incidences >= inst.graph.report.achieved;
    o.achieved = json!({
        "p": rep.params.p,
        "D2": rep.params.d2,
        "n": rep.params.n,
        "incidences": inst.incidences,
        "graph_edges": inst.graph.report.achieved,
        "degenerate_sections": inst.degenerate_sections,
        "point_bound_violations": inst.point_bound_violations,
        "polynomial": inst.graph.poly.to_string(),
        "warnings": rep.warnings,
    });
    o.bound = json!({ "target": rep.target, "kind": rep.bound_kind });
    o.verification = json!({
        "incidences_ge_edges": containment,
        "point_bound_holds": inst.point_bound_violations == 0,
        "graph_kss": verification_name(inst.graph.report.verification),
        "incidence_kss": verification_name(rep.verification),
        "s": rep.params.s_verified,
        "witness": rep.witness,
        "meets_target": rep.meets_target(),
    });
    o.retries = json!(rep.retries);
    o.fail_if(!containment || inst.point_bound_violations > 0 || !rep.meets_target());
    apply_verification(&mut o, rep.verification);
    o.csv_rows.push(format!(
        "{},{},{},{},{},{},{},{},{},{}",
        rep.params.p.unwrap_or(0),
        a.dim,
        rep.params.d2.unwrap_or(0),
        a.m,
        rep.params.n.unwrap_or(0),
        inst.incidences,
        inst.graph.report.achieved,
        rep.target,
        inst.degenerate_sections,
        verification_name(rep.verification)
    ));
    if let Some(path) = dump {
        let body: String = inst.varieties.iter().map(|f| format!("{f}\n")).collect();
        o.dumps.push((path.to_path_buf(), body));
        o.dumps.push((path.with_extension("graph"), inst.graph.graph.to_fixture()));
    }
    Ok(o)
}

fn unit_distance_cmd(cli: &Cli, a: &UnitDistanceArgs, seed: u64, dump: Option<&Path>) -> Run<Outcome> {
    let opts = UnitDistanceOptions {
        strategy: match a.strategy {
            StrategyArg::MapImage => EvasiveStrategy::MapImage,
            StrategyArg::Random => EvasiveStrategy::Random,
        },
        s: a.s,
        scan_max: a.scan_max,
        cap: DEFAULT_SEARCH_CAP,
    };
    let insts = if a.p.is_empty() {
        let n = a.n.ok_or_else(|| usage("give --n or --p"))?;
        vec![unit_distance_instance(n, a.d, seed, &opts)?]
    } else {
        a.p.iter().map(|&p| unit_distance_instance_for_prime(p, a.d, a.n, seed, &opts)).collect::<Result<_, _>>()?
    };
    let mut r = a.clone();
    r.p = insts.iter().map(|i| i.p).collect();
    let mut o = Outcome::new(
        config(cli, &r),
        "p,d,points,unit_distances,target,cross_pairs,verification,shift_retries",
    );
    let mut rows = Vec::new();
    for inst in &insts {
        let rep = &inst.report;
        // subsampling to n points drops pairs, so only the full union is held to the target
        let union = rep.metrics.get("union_size").copied().unwrap_or(0) as usize;
        let subsampled = inst.points.len() < union;
        let meets = inst.cross_pairs as f64 >= rep.target && (subsampled || inst.unit_distances as f64 >= rep.target);
        o.fail_if(!meets);
        apply_verification(&mut o, rep.verification);
        o.csv_rows.push(format!(
            "{},{},{},{},{},{},{},{}",
            inst.p,
            inst.d,
            inst.points.len(),
            inst.unit_distances,
            rep.target,
            inst.cross_pairs,
            verification_name(rep.verification),
            rep.retries.shift
        ));
        rows.push(json!({
            "p": inst.p,
            "points": inst.points.len(),
            "evasive_size": inst.u.len(),
            "unit_distances": inst.unit_distances,
            "cross_pairs": inst.cross_pairs,
            "target": rep.target,
            "meets_target": meets,
            "subsampled": subsampled,
            "shift": inst.shift.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "embedded": inst.embedded.is_some(),
            "kss": verification_name(rep.verification),
            "witness": rep.witness,
            "metrics": rep.metrics,
            "warnings": rep.warnings,
            "retries": rep.retries,
        }));
        if let Some(path) = dump {
            let target = if insts.len() == 1 {
                path.to_path_buf()
            } else {
                let mut name = path.as_os_str().to_owned();
                name.push(format!(".p{}", inst.p));
                PathBuf::from(name)
            };
            let ps = PointSet { form: inst.form.clone(), points: inst.points.clone() };
            o.dumps.push((target, ps.to_fixture()));
        }
    }
    let exponent = 2.0 - 1.0 / (a.d.div_ceil(2) + 1) as f64;
    let slope = if insts.len() >= 2 {
        let xs: Vec<f64> = insts.iter().map(|i| i.points.len() as f64).collect();
        let ys: Vec<f64> = insts.iter().map(|i| i.unit_distances as f64).collect();
        Some(loglog_slope(&xs, &ys))
    } else {
        None
    };
    o.achieved = json!({ "instances": rows, "slope": slope });
    o.bound = json!({ "target": "|U|²/(2p)", "exponent": exponent, "kind": "halved-expectation" });
    o.verification = json!({
        "s": a.s,
        "strategy": opts.strategy.name(),
        "all_free": insts.iter().all(|i| i.report.verification == Verification::VerifiedFree),
    });
    o.retries = json!(insts.iter().map(|i| i.report.retries.clone()).collect::<Vec<_>>());
    Ok(o)
}

/// Points of the zero-centered unit sphere, memoized in `FFIL_CACHE_DIR`
/// as point-set fixtures when that variable is set.
fn unit_sphere_table(form: &BilinearForm) -> Run<Vec<Vector>> {
    let compute = || geometry::sphere_points(&Sphere::unit(form.clone()));
    let Some(dir) = std::env::var_os("FFIL_CACHE_DIR") else {
        return Ok(compute()?);
    };
    let sig: String = form.signature().iter().map(|&s| if s > 0 { 'p' } else { 'm' }).collect();
    let path = Path::new(&dir).join(format!("sphere-p{}-d{}-{sig}.pts", form.ctx().p(), form.dim()));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(ps) = PointSet::parse_fixture(&text) {
            if ps.form == *form {
                return Ok(ps.points);
            }
        }
    }
    let pts = compute()?;
    let ps = PointSet { form: form.clone(), points: pts };
    // the cache is an optimization; failures to write are not fatal
    let _ = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, ps.to_fixture()));
    Ok(ps.points)
}

fn sphere_cmd(cli: &Cli, a: &SphereArgs, seed: u64) -> Run<Outcome> {
    let ctx = FieldCtx::prime(a.p)?;
    let form = BilinearForm::unit_distance(ctx, a.d)?;
    let mut r = a.clone();
    let dim_cap = a.dim_cap.unwrap_or(a.d.saturating_sub(1));
    r.dim_cap = Some(dim_cap);
    if a.max_k == 0 {
        return Err(usage("--max-k must be ≥ 1"));
    }
    let base = unit_sphere_table(&form)?;
    let total = mpoly::domain_size(a.p, a.d, DEFAULT_ENUM_CAP)? as u64;
    let mut o = Outcome::new(config(cli, &r), "family,k,flat_dim,identity_ok,orthogonal_ok");

    let results = par::map_range(a.families, |fi| -> Result<(usize, i64, bool, bool), Error> {
        let mut g = rng::trial(seed, fi as u64);
        let k = g.random_range(1..=a.max_k);
        let spheres: Vec<Sphere> = (0..k)
            .map(|_| Sphere::new(form.clone(), geometry::vector_at(ctx, a.d, g.random_range(0..total))))
            .collect::<Result<_, _>>()?;
        let res = intersect_spheres_to_flat(&spheres)?;
        // both sides lie in S_1, so comparing on S_1's points decides equality
        let s1: Vec<Vector> = base.iter().map(|x| geometry::add(x, &spheres[0].center)).collect();
        let identity = s1.iter().all(|x| res.flat.contains(x) == spheres.iter().all(|s| s.contains(x)));
        let centers = AffineFlat::affine_span(&res.centers)?;
        let orthogonal = res.flat.is_empty() || res.flat.is_orthogonal(&form, &centers);
        let dim = res.flat.dim().map_or(-1, |d| d as i64);
        Ok((k, dim, identity, orthogonal))
    });
    let mut identity_all = true;
    let mut orth_all = true;
    let mut dims = Vec::new();
    for (fi, res) in results.into_iter().enumerate() {
        let (k, dim, id, orth) = res?;
        identity_all &= id;
        orth_all &= orth;
        dims.push(dim);
        o.csv_rows.push(format!("{fi},{k},{dim},{id},{orth}"));
    }

    let flats = flats_in_sphere_check(&Sphere::unit(form.clone()), dim_cap)?;
    let pair = if a.d % 2 == 1 { Some(isotropic_unit_pair_search(&form)?) } else { None };
    let p_is_3_mod_4 = a.p % 4 == 3;
    let pair_found = pair.as_ref().is_some_and(|p| p.is_some());
    o.achieved = json!({
        "families": a.families,
        "flat_dims": dims,
        "sphere_points": base.len(),
        "flats_in_sphere": flats,
        "isotropic_pair": pair.as_ref().map(|p| p.as_ref().map(|hit| json!({
            "v_basis": hit.v_basis.iter().map(|b| b.iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "w": hit.w.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        }))),
    });
    o.verification = json!({
        "intersection_identity": identity_all,
        "orthogonal_to_centers": orth_all,
        "flats_pass": flats.all_pass,
        "isotropic_pair_searched": pair.is_some(),
        "isotropic_pair_found": pair_found,
        "no_pair_expected": p_is_3_mod_4 && pair.is_some(),
    });
    o.fail_if(!identity_all || !orth_all || !flats.all_pass || (p_is_3_mod_4 && pair_found));
    Ok(o)
}

/// Points of `F_p^D` against all affine hyperplanes `a·x = c` (`a`
/// normalized to leading coefficient 1).
fn point_hyperplane_incidence(p: u64, dim: usize) -> Run<BipartiteGraph> {
    let ctx = FieldCtx::prime(p)?;
    let pts = mpoly::all_points(p, dim, DEFAULT_ENUM_CAP)?;
    let normals: Vec<Point> =
        pts.iter().filter(|v| v.iter().find(|&&c| c != 0) == Some(&1)).cloned().collect();
    let planes: Vec<(usize, u32)> = (0..normals.len()).flat_map(|i| (0..p as u32).map(move |c| (i, c))).collect();
    let mut edges = Vec::new();
    for (xi, x) in pts.iter().enumerate() {
        for (hi, &(ni, c)) in planes.iter().enumerate() {
            let dot = x.iter().zip(&normals[ni]).fold(0u32, |acc, (&u, &v)| ctx.add_res(acc, ctx.mul_res(u, v)));
            if dot == c {
                edges.push((xi, hi));
            }
        }
    }
    Ok(BipartiteGraph::from_edges(pts.len(), planes.len(), edges)?)
}

fn pattern_scan_cmd(cli: &Cli, a: &PatternScanArgs, seed: u64) -> Run<Outcome> {
    let (host, pattern): (BipartiteGraph, Pattern) = match a.kind {
        PatternKind::Pi => {
            let form = BilinearForm::unit_distance(FieldCtx::prime(a.p)?, a.d)?;
            (geometry::point_sphere_incidence(&form, DEFAULT_ENUM_CAP)?, gen_pattern_pi(a.d + 1)?)
        }
        PatternKind::H => {
            if a.delta != 1 {
                return Err(usage("H_{d,Δ} hosts are point-hyperplane incidences; only --delta 1 is supported"));
            }
            (point_hyperplane_incidence(a.p, a.d + 1)?, gen_forbidden_h(a.d, a.delta)?.pattern)
        }
    };
    let mut o = Outcome::new(config(cli, a), "host,rows,cols,edges,found");
    let (m, n) = host.sizes();
    let subs: Vec<(Vec<usize>, Vec<usize>)> = if a.hosts == 0 {
        vec![((0..m).collect(), (0..n).collect())]
    } else {
        (0..a.hosts)
            .map(|i| {
                let mut g = rng::trial(seed, i as u64);
                let mut rows = index::sample(&mut g, m, a.host_rows.min(m)).into_vec();
                let mut cols = index::sample(&mut g, n, a.host_cols.min(n)).into_vec();
                rows.sort_unstable();
                cols.sort_unstable();
                (rows, cols)
            })
            .collect()
    };
    let mut found = Vec::new();
    for (i, (rows, cols)) in subs.iter().enumerate() {
        let sub = host.induced(rows, cols);
        let hit = find_induced_pattern(&sub, &pattern)?;
        o.csv_rows.push(format!("{i},{},{},{},{}", rows.len(), cols.len(), sub.edge_count(), hit.is_some()));
        if let Some(e) = hit {
            found.push(json!({
                "host": i,
                "points": e.a.iter().map(|&j| rows[j]).collect::<Vec<_>>(),
                "sets": e.b.iter().map(|&j| cols[j]).collect::<Vec<_>>(),
            }));
        }
    }
    let (pa, pb) = pattern.sizes();
    o.achieved = json!({
        "host_size": [m, n],
        "host_edges": host.edge_count(),
        "pattern_size": [pa, pb],
        "pattern": pattern.to_string(),
        "hosts_scanned": subs.len(),
        "embeddings": found,
    });
    o.verification = json!({ "pattern_absent": found.is_empty() });
    o.fail_if(!found.is_empty());
    Ok(o)
}

fn zero_count_cmd(cli: &Cli, a: &ZeroCountArgs, seed: u64) -> Run<Outcome> {
    let res = zero_count_experiment(a.p, a.dim, a.degree, a.trials, seed)?;
    let mut o = Outcome::new(config(cli, a), "trial,zeros,success");
    for (i, &c) in res.counts.iter().enumerate() {
        o.csv_rows.push(format!("{i},{c},{}", c as f64 >= res.threshold));
    }
    o.achieved = json!({
        "fraction": res.fraction,
        "successes": res.successes,
        "trials": res.trials,
        "mean_zeros": res.mean_zeros,
    });
    o.bound = json!({ "threshold_zeros": res.threshold, "min_fraction": a.min_fraction, "guaranteed_fraction": 0.75 });
    o.verification = json!({ "fraction_ok": res.fraction >= a.min_fraction });
    o.fail_if(res.fraction < a.min_fraction);
    Ok(o)
}

fn indep_set_cmd(cli: &Cli, a: &IndepSetArgs, seed: u64) -> Run<Outcome> {
    let mut o = Outcome::new(config(cli, a), "instance,n,k,m,bound,size,attempts,independent");
    let results = par::map_range(a.instances, |i| -> Result<_, Error> {
        let mut g = rng::trial(seed, i as u64);
        let h = Hypergraph::random(a.n, a.k, a.edges, &mut g)?;
        let set = hypergraph_independent_set(&h, &mut g)?;
        let independent = h.is_independent(&set.vertices);
        Ok((set, independent))
    });
    let mut sizes = Vec::new();
    let mut all_ok = true;
    let mut max_attempts = 0;
    let bound = bigraph::independent_set_bound(a.n, a.edges, a.k);
    for (i, res) in results.into_iter().enumerate() {
        let (set, independent) = res?;
        let ok = independent && set.vertices.len() >= set.bound;
        all_ok &= ok;
        max_attempts = max_attempts.max(set.attempts);
        o.csv_rows.push(format!(
            "{i},{},{},{},{},{},{},{independent}",
            a.n,
            a.k,
            a.edges,
            set.bound,
            set.vertices.len(),
            set.attempts
        ));
        sizes.push(set.vertices.len());
    }
    o.achieved = json!({ "sizes": sizes });
    o.bound = json!({ "size_bound": bound });
    o.verification = json!({ "all_independent_and_large": all_ok });
    o.retries = json!({ "max_attempts": max_attempts, "cap": bigraph::INDEPENDENT_SET_RETRIES });
    o.fail_if(!all_ok);
    Ok(o)
}
