use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fjvote_core::campaign::SeedSet;
use fjvote_core::diffusion::{convergence_profile, snapshot};
use fjvote_core::harness::alloc::{self, TrackingAllocator};
use fjvote_core::harness::{
    dataset_hash, exact_prefix_scores, gen_synthetic, read_seeds, run_bench, run_method, validate,
    write_seeds, BenchSpec, BenchWriter, GenKind, GenSpec, Method, MethodParams, Provenance,
    RunManifest, StubbornnessOverride, ThetaChoice, ThetaMode,
};
use fjvote_core::scores::{score_all, ScoreKind};
use fjvote_core::selection::minwin::min_win_select;
use fjvote_core::walks::{generate_sketches, generate_walks, lambdas_for, RwParams};
use fjvote_core::{Dataset, Error, ScoreSpec};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser)]
#[command(name = "fjvote", version, about = "Seed selection for voting scores under opinion diffusion")]
struct Cli {
    /// Worker threads for the parallel engines (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Check a dataset's invariants and print one line per check.
    Validate(ValidateArgs),
    /// Print opinions at horizon t, or the per-step convergence profile.
    Diffuse(DiffuseArgs),
    /// Evaluate a score at horizon t.
    Score(ScoreCmdArgs),
    /// Choose k seeds for the target.
    Select(SelectArgs),
    /// Smallest budget with which the target wins.
    Minwin(MinwinArgs),
    /// Run a method x budget x trial grid and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKindArg {
    ScaleFree,
    Random,
    Subsample,
    EdgeList,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKindArg,
    #[arg(long, default_value_t = 0)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    candidates: usize,
    /// Links per new node (scale-free).
    #[arg(long, default_value_t = 3)]
    attach: usize,
    /// Edge probability (random).
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Source config (subsample).
    #[arg(long)]
    source: Option<PathBuf>,
    /// Fraction of nodes kept (subsample).
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    /// `src dst weight` files, one shared or one per candidate (edge-list).
    #[arg(long = "edge-list")]
    edge_list: Vec<PathBuf>,
    /// Opinion table replacing the random opinions.
    #[arg(long)]
    opinions: Option<PathBuf>,
    /// `uniform:D` or a stubbornness table replacing the random values.
    #[arg(long)]
    stubbornness: Option<String>,
    #[arg(long)]
    rng_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    config: PathBuf,
    /// Position weights to check, comma separated.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DiffuseArgs {
    config: PathBuf,
    #[arg(long, short, default_value_t = 20)]
    t: usize,
    /// Seed file applied to the target candidate.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    target: Option<usize>,
    /// Percent thresholds; prints the fraction of changed nodes per step instead.
    #[arg(long, value_delimiter = ',')]
    profile: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct ScoreArgs {
    #[arg(long, default_value = "cumulative")]
    score: String,
    /// Rank threshold for the p-approval scores.
    #[arg(long)]
    p: Option<usize>,
    /// Position weights, comma separated, for positional-p-approval.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    /// Target candidate (default: the config's target).
    #[arg(long)]
    target: Option<usize>,
    /// Opinions closer than this count as tied.
    #[arg(long, default_value_t = 0.0)]
    tie_eps: f64,
}

impl ScoreArgs {
    fn spec(&self, ds: &Dataset) -> fjvote_core::Result<ScoreSpec> {
        let kind: ScoreKind = self.score.parse()?;
        let r = ds.graph.candidate_count();
        let target = self.target.unwrap_or(ds.target());
        let mut spec = ScoreSpec::of_kind(kind, target, r);
        if let Some(p) = self.p {
            spec.p = p;
        }
        if let Some(w) = &self.omega {
            spec.omega = w.clone();
        }
        let spec = spec.with_tie_eps(self.tie_eps);
        spec.validate(r)?;
        Ok(spec)
    }
}

#[derive(Args)]
struct ScoreCmdArgs {
    config: PathBuf,
    #[arg(long, short, default_value_t = 20)]
    t: usize,
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[command(flatten)]
    score: ScoreArgs,
    /// Print every candidate's score, not just the target's.
    #[arg(long)]
    all: bool,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    /// Fixed sketch count.
    #[arg(long, conflicts_with = "theta_mode")]
    theta: Option<usize>,
    #[arg(long)]
    theta_mode: Option<String>,
    /// Per-sample success probability in the scan inequalities.
    #[arg(long, default_value_t = 1.0)]
    scan_rho: f64,
    /// Walks per node for gap estimation.
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    lambda_cap: Option<usize>,
}

impl EstimatorArgs {
    fn params(&self, seed: u64) -> fjvote_core::Result<MethodParams> {
        let theta = match (self.theta, &self.theta_mode) {
            (Some(t), _) => ThetaChoice::Fixed(t),
            (None, Some(m)) => ThetaChoice::Mode(m.parse::<ThetaMode>()?),
            (None, None) => ThetaChoice::Auto,
        };
        Ok(MethodParams {
            rng_seed: seed,
            delta: self.delta,
            rho: self.rho,
            epsilon: self.epsilon,
            l: self.l,
            theta,
            scan_rho: self.scan_rho,
            alpha: self.alpha,
            lambda_cap: self.lambda_cap,
            ..MethodParams::default()
        })
    }
}

#[derive(Args)]
struct SelectArgs {
    config: PathBuf,
    /// dm, rw, rs, sandwich, or baseline:{degree,pagerank,rwr,random}.
    #[arg(long, default_value = "dm")]
    method: String,
    #[arg(long, short)]
    k: usize,
    #[arg(long, short, default_value_t = 20)]
    t: usize,
    /// Lazy greedy evaluation (cumulative score only).
    #[arg(long)]
    celf: bool,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Seed file to write (`rank node score`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Write the generated walks or sketches (`start<TAB>v0,v1,...`).
    #[arg(long)]
    dump_walks: Option<PathBuf>,
}

#[derive(Args)]
struct MinwinArgs {
    config: PathBuf,
    #[arg(long, short, default_value_t = 20)]
    t: usize,
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    /// Comma-separated method names; an empty list yields a header-only table.
    #[arg(long, value_delimiter = ',', default_value = "dm")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    #[arg(long, short, default_value_t = 20)]
    t: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[command(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Process result: an exit status plus a message for stderr.
enum Failure {
    Validation(String),
    Infeasible(String),
    CannotWin(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InfeasibleTheta { .. } => Failure::Infeasible(msg),
            Error::Parse { .. }
            | Error::DuplicateEdge { .. }
            | Error::NodeOutOfRange { .. }
            | Error::CandidateOutOfRange { .. }
            | Error::ZeroIncomingWeight { .. }
            | Error::NotStochastic { .. }
            | Error::OutOfUnitRange { .. }
            | Error::MissingRow { .. }
            | Error::Config(_)
            | Error::InvalidScore(_) => Failure::Validation(msg),
            _ => Failure::Other(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn rng_seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_seeds(ds: &Dataset, path: Option<&Path>, target: usize) -> fjvote_core::Result<SeedSet> {
    let nodes = match path {
        Some(p) => read_seeds(p)?,
        None => Vec::new(),
    };
    let s = SeedSet::new(target, nodes)?;
    s.check_range(ds.graph.node_count())?;
    Ok(s)
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let kind = match a.kind {
        GenKindArg::ScaleFree => GenKind::ScaleFree { attach: a.attach },
        GenKindArg::Random => GenKind::Random { p: a.p },
        GenKindArg::Subsample => GenKind::Subsample {
            source: a
                .source
                .ok_or_else(|| Failure::Other("--source is required for subsample".into()))?,
            fraction: a.fraction,
        },
        GenKindArg::EdgeList => GenKind::EdgeList { files: a.edge_list },
    };
    let stubbornness = match a.stubbornness {
        Some(s) if s.starts_with("uniform:") => Some(StubbornnessOverride::Policy(s.parse()?)),
        Some(s) => Some(StubbornnessOverride::File(PathBuf::from(s))),
        None => None,
    };
    let spec = GenSpec {
        kind,
        nodes: a.nodes,
        candidates: a.candidates,
        rng_seed: a.rng_seed,
        opinions: a.opinions,
        stubbornness,
    };
    let data = gen_synthetic(&spec)?;
    let cfg = data.write(&a.out)?;
    eprintln!(
        "wrote {} ({} nodes, {} edges per candidate)",
        cfg.display(),
        data.nodes,
        data.edges.first().map_or(0, Vec::len)
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let report = validate(&a.config, a.omega.as_deref())?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{report}");
    }
    if report.passed() {
        Ok(())
    } else {
        let n = report.failed().count();
        Err(Failure::Validation(format!("{n} check(s) failed")))
    }
}

fn cmd_diffuse(a: DiffuseArgs) -> CliResult {
    let ds = Dataset::load(&a.config)?;
    let target = a.target.unwrap_or(ds.target());
    let seeds = load_seeds(&ds, a.seeds.as_deref(), target)?;
    let mut out = output(None)?;
    if let Some(deltas) = a.profile {
        let state = ds.campaigns[target].apply_seeds(&seeds)?;
        let prof = convergence_profile(&ds.graph, &state, a.t, &deltas)?;
        let header: Vec<String> = deltas.iter().map(|d| format!("delta_{d}")).collect();
        writeln!(out, "t\t{}", header.join("\t"))?;
        for (i, row) in prof.iter().enumerate() {
            let vals: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}\t{}", i + 1, vals.join("\t"))?;
        }
    } else {
        let snap = snapshot(&ds.graph, &ds.campaigns, &seeds, a.t)?;
        for (q, row) in snap.rows().iter().enumerate() {
            for (v, x) in row.iter().enumerate() {
                writeln!(out, "{q}\t{v}\t{x}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_score(a: ScoreCmdArgs) -> CliResult {
    let ds = Dataset::load(&a.config)?;
    let spec = a.score.spec(&ds)?;
    let seeds = load_seeds(&ds, a.seeds.as_deref(), spec.target)?;
    let snap = snapshot(&ds.graph, &ds.campaigns, &seeds, a.t)?;
    let scores = score_all(&snap, &spec)?;
    if a.all {
        for (q, s) in scores.iter().enumerate() {
            println!("{q}\t{s}");
        }
    } else {
        println!("{}", scores[spec.target]);
    }
    Ok(())
}

fn dump_walks(ds: &Dataset, spec: &ScoreSpec, run_provenance: &Provenance, k: usize, t: usize, params: &MethodParams, path: &Path) -> CliResult {
    let store = match run_provenance {
        Provenance::Walks(_) => {
            let rw = RwParams {
                alpha: params.alpha,
                lambda_cap: params.lambda_cap,
                gap_floor: params.gap_floor,
                ..RwParams::new(params.delta, params.rho, params.rng_seed)
            };
            let (lambdas, _) = lambdas_for(&ds.graph, &ds.campaigns, spec, k, t, &rw)?;
            generate_walks(&ds.graph, &ds.campaigns[spec.target], t, &lambdas, params.rng_seed)?
        }
        Provenance::Sketches(p) => {
            generate_sketches(&ds.graph, &ds.campaigns[spec.target], t, p.theta, params.rng_seed)?
        }
        _ => return Err(Failure::Other("--dump-walks applies to rw and rs".into())),
    };
    let mut out = BufWriter::new(File::create(path)?);
    store.dump(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_select(a: SelectArgs) -> CliResult {
    let ds = Dataset::load(&a.config)?;
    let spec = a.score.spec(&ds)?;
    let mut method: Method = a.method.parse()?;
    if a.celf {
        method = match method {
            Method::Dm | Method::DmCelf => Method::DmCelf,
            other => return Err(Failure::Other(format!("--celf does not apply to {other}"))),
        };
    }
    let seed = rng_seed_or_fresh(a.est.rng_seed);
    let params = a.est.params(seed)?;
    let baseline = alloc::reset_peak();
    let run = run_method(&ds.graph, &ds.campaigns, &spec, method, a.k, a.t, &params)?;
    let peak = alloc::peak_since(baseline, run.store_bytes);
    let trace = exact_prefix_scores(&ds.graph, &ds.campaigns, &spec, &run.seeds, a.t)?;
    if let Some(p) = &a.dump_walks {
        dump_walks(&ds, &spec, &run.provenance, a.k, a.t, &params, p)?;
    }
    match &a.out {
        Some(p) => write_seeds(p, &run.seeds, &trace)?,
        None => print!("{}", fjvote_core::harness::manifest::format_seeds(&run.seeds, &trace)),
    }
    let manifest = RunManifest::new(dataset_hash(&a.config)?, &spec, a.k, a.t, seed, run, trace, peak);
    eprintln!(
        "{}: {} seeds, {} = {}, selection {:.3}s",
        manifest.method,
        manifest.seeds.len(),
        spec.kind,
        manifest.score_value,
        manifest.select_seconds
    );
    if let Provenance::Sketches(p) = &manifest.provenance {
        eprintln!("theta = {} ({})", p.theta, p.mode);
    }
    if let Some(p) = &a.manifest {
        fs::write(p, manifest.to_json())?;
    }
    Ok(())
}

fn cmd_minwin(a: MinwinArgs) -> CliResult {
    let ds = Dataset::load(&a.config)?;
    let spec = a.score.spec(&ds)?;
    let res = min_win_select(&ds.graph, &ds.campaigns, &spec, a.t)?;
    for (k, won) in &res.probes {
        eprintln!("k = {k}: {}", if *won { "wins" } else { "does not win" });
    }
    match res.k {
        Some(k) => {
            let trace = exact_prefix_scores(&ds.graph, &ds.campaigns, &spec, &res.seeds, a.t)?;
            println!("k* = {k}");
            match &a.out {
                Some(p) => write_seeds(p, &res.seeds, &trace)?,
                None => print!("{}", fjvote_core::harness::manifest::format_seeds(&res.seeds, &trace)),
            }
            Ok(())
        }
        None => Err(Failure::CannotWin(format!(
            "candidate {} cannot win even with every node seeded",
            spec.target
        ))),
    }
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let ds = Dataset::load(&a.config)?;
    let spec = a.score.spec(&ds)?;
    let methods = a
        .methods
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<Method>())
        .collect::<fjvote_core::Result<Vec<_>>>()?;
    let seed = rng_seed_or_fresh(a.est.rng_seed);
    let bench = BenchSpec {
        methods,
        score: spec,
        ks: a.k,
        horizon: a.t,
        repeats: a.repeats,
        params: a.est.params(seed)?,
    };
    let mut writer = BenchWriter::new(output(a.out.as_deref())?)?;
    eprintln!("rng seed {seed}");
    run_bench(&ds.graph, &ds.campaigns, &bench, |row| writer.write(row))?;
    writer.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    alloc::activate();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Diffuse(a) => cmd_diffuse(a),
        Command::Score(a) => cmd_score(a),
        Command::Select(a) => cmd_select(a),
        Command::Minwin(a) => cmd_minwin(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Validation(m) => (2, m),
                Failure::Infeasible(m) => (3, m),
                Failure::CannotWin(m) => (4, m),
                Failure::Other(m) => (1, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
