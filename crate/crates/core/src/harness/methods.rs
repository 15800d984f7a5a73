//! One entry point per selection method, shared by `select` and `bench`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::campaign::CampaignState;
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::rng;
use crate::scores::{ScoreKind, ScoreSpec};
use crate::selection::baselines::{baseline_select, Baseline};
use crate::selection::sandwich::{sandwich_select, SandwichResult};
use crate::selection::{check_celf, exact_objective, greedy_select, Objective};
use crate::sketch::{
    estimate_mu_star, estimate_opt_lower_bound, heuristic_theta, rs_greedy, theta_cumulative,
    theta_rank_closed_form, theta_scan_copeland, theta_scan_rank, OptProbe,
};
use crate::walks::{lambda_cumulative, rw_greedy, LambdaSummary, RwParams, DEFAULT_GAP_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dm,
    DmCelf,
    Rw,
    Rs,
    Sandwich,
    Baseline(Baseline),
}

impl Method {
    /// Methods whose output depends only on the inputs, never on the seed.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Method::Rw | Method::Rs | Method::Baseline(Baseline::Random))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dm" => Method::Dm,
            "dm-celf" | "celf" => Method::DmCelf,
            "rw" => Method::Rw,
            "rs" => Method::Rs,
            "sandwich" => Method::Sandwich,
            other => {
                let name = other.strip_prefix("baseline:").unwrap_or(other);
                Method::Baseline(name.parse()?)
            }
        })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Dm => f.write_str("dm"),
            Method::DmCelf => f.write_str("dm-celf"),
            Method::Rw => f.write_str("rw"),
            Method::Rs => f.write_str("rs"),
            Method::Sandwich => f.write_str("sandwich"),
            Method::Baseline(b) => {
                let name = match b {
                    Baseline::Degree => "degree",
                    Baseline::PageRank => "pagerank",
                    Baseline::Rwr => "rwr",
                    Baseline::Random => "random",
                };
                write!(f, "baseline:{name}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaMode {
    /// Cumulative sample-count bound with an estimated OPT lower bound.
    Formula,
    /// Smallest sample count satisfying the rank or Copeland inequality.
    Scan,
    /// Doubling until the achieved score stabilizes.
    Heuristic,
}

impl FromStr for ThetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "formula" => ThetaMode::Formula,
            "scan" => ThetaMode::Scan,
            "heuristic" => ThetaMode::Heuristic,
            other => return Err(Error::InvalidArgument(format!("unknown theta mode {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaChoice {
    Fixed(usize),
    Mode(ThetaMode),
    /// `Formula` for the cumulative score, `Scan` otherwise.
    Auto,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodParams {
    pub rng_seed: u64,
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub l: f64,
    pub theta: ThetaChoice,
    /// Per-sample success probability in the rank and Copeland inequalities.
    pub scan_rho: f64,
    /// Walks per node for gap estimation; defaults to `lambda_cumulative(delta, rho)`.
    pub alpha: Option<usize>,
    pub gap_floor: f64,
    pub lambda_cap: Option<usize>,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            rng_seed: 0,
            delta: 0.1,
            rho: 0.9,
            epsilon: 0.1,
            l: 1.0,
            theta: ThetaChoice::Auto,
            scan_rho: 1.0,
            alpha: None,
            gap_floor: DEFAULT_GAP_FLOOR,
            lambda_cap: None,
        }
    }
}

impl MethodParams {
    fn rw(&self) -> RwParams {
        RwParams {
            alpha: self.alpha,
            gap_floor: self.gap_floor,
            lambda_cap: self.lambda_cap,
            ..RwParams::new(self.delta, self.rho, self.rng_seed)
        }
    }

    fn alpha(&self) -> Result<usize> {
        match self.alpha {
            Some(a) => Ok(a),
            None => lambda_cumulative(self.delta, self.rho),
        }
    }
}

/// How the sketch count was chosen.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaProvenance {
    pub theta: usize,
    pub mode: String,
    pub epsilon: Option<f64>,
    pub l: Option<f64>,
    pub rho: Option<f64>,
    pub opt_lower_bound: Option<f64>,
    pub opt_probes: Vec<OptProbe>,
    pub mu_star: Option<f64>,
    pub ln_deficit: Option<f64>,
    pub ln_deficit_target: Option<f64>,
    pub heuristic_steps: Vec<(usize, f64)>,
}

impl ThetaProvenance {
    fn new(theta: usize, mode: &str) -> Self {
        ThetaProvenance {
            theta,
            mode: mode.to_string(),
            epsilon: None,
            l: None,
            rho: None,
            opt_lower_bound: None,
            opt_probes: Vec::new(),
            mu_star: None,
            ln_deficit: None,
            ln_deficit_target: None,
            heuristic_steps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Exact,
    Walks(LambdaSummary),
    Sketches(ThetaProvenance),
    Baseline,
}

fn theta_from_scan(theta: u64) -> Result<usize> {
    usize::try_from(theta).map_err(|_| Error::InvalidArgument(format!("theta {theta} does not fit in memory")))
}

/// Chooses the sketch count for `spec` at budget `k`.
pub fn resolve_theta(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    params: &MethodParams,
) -> Result<ThetaProvenance> {
    let n = graph.node_count();
    let r = graph.candidate_count();
    let mode = match params.theta {
        ThetaChoice::Fixed(theta) => return Ok(ThetaProvenance::new(theta, "fixed")),
        ThetaChoice::Mode(m) => m,
        ThetaChoice::Auto if spec.kind == ScoreKind::Cumulative => ThetaMode::Formula,
        ThetaChoice::Auto => ThetaMode::Scan,
    };
    match (mode, spec.kind) {
        (ThetaMode::Heuristic, _) => {
            let h = heuristic_theta(graph, campaigns, spec, params.rng_seed)?;
            let mut p = ThetaProvenance::new(h.theta, "heuristic");
            p.heuristic_steps = h.steps;
            Ok(p)
        }
        (ThetaMode::Formula, ScoreKind::Cumulative) => {
            let lb = estimate_opt_lower_bound(graph, campaigns, spec, k, horizon, params.rng_seed)?;
            let theta = theta_cumulative(n, k, lb.value, params.epsilon, params.l)?;
            let mut p = ThetaProvenance::new(theta, "formula");
            p.epsilon = Some(params.epsilon);
            p.l = Some(params.l);
            p.opt_lower_bound = Some(lb.value);
            p.opt_probes = lb.probes;
            Ok(p)
        }
        (ThetaMode::Formula, kind) => Err(Error::InvalidArgument(format!(
            "the formula theta mode applies to the cumulative score, not {kind}"
        ))),
        (ThetaMode::Scan, ScoreKind::Cumulative) => Err(Error::InvalidArgument(
            "the scan theta mode applies to rank and Copeland scores".into(),
        )),
        (ThetaMode::Scan, ScoreKind::Copeland) => {
            let mu = estimate_mu_star(graph, campaigns, spec.target, k, horizon, params.alpha()?, params.rng_seed)?
                .max(params.gap_floor);
            let scan = theta_scan_copeland(n, k, r, mu, params.l, params.scan_rho)?;
            let mut p = ThetaProvenance::new(theta_from_scan(scan.theta)?, "scan");
            p.l = Some(params.l);
            p.rho = Some(params.scan_rho);
            p.mu_star = Some(mu);
            p.ln_deficit = Some(scan.ln_deficit);
            p.ln_deficit_target = Some(scan.ln_deficit_target);
            Ok(p)
        }
        (ThetaMode::Scan, _) => {
            let lb = estimate_opt_lower_bound(graph, campaigns, spec, k, horizon, params.rng_seed)?;
            let theta = if params.scan_rho == 1.0 {
                theta_rank_closed_form(n, k, lb.value, params.epsilon, params.l)
            } else {
                theta_scan_rank(n, k, r, lb.value, params.epsilon, params.l, params.scan_rho)?.theta
            };
            let mut p = ThetaProvenance::new(theta_from_scan(theta)?, "scan");
            p.epsilon = Some(params.epsilon);
            p.l = Some(params.l);
            p.rho = Some(params.scan_rho);
            p.opt_lower_bound = Some(lb.value);
            p.opt_probes = lb.probes;
            Ok(p)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRun {
    pub method: Method,
    pub seeds: Vec<usize>,
    /// The method's own objective after each insertion (estimated for rw and rs).
    pub method_trace: Vec<f64>,
    pub walkgen_seconds: f64,
    pub select_seconds: f64,
    pub store_bytes: usize,
    pub provenance: Provenance,
    pub sandwich: Option<SandwichResult>,
}

/// Runs `method` at budget `k`. Timing covers selection only; for rw and rs the walk
/// or sketch generation is reported separately.
pub fn run_method(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    method: Method,
    k: usize,
    horizon: usize,
    params: &MethodParams,
) -> Result<MethodRun> {
    let mut run = MethodRun {
        method,
        seeds: Vec::new(),
        method_trace: Vec::new(),
        walkgen_seconds: 0.0,
        select_seconds: 0.0,
        store_bytes: 0,
        provenance: Provenance::Exact,
        sandwich: None,
    };
    let t0 = Instant::now();
    match method {
        Method::Dm | Method::DmCelf => {
            let celf = method == Method::DmCelf;
            check_celf(spec.kind, celf)?;
            let g = greedy_select(graph, campaigns, spec, k, horizon, celf)?;
            run.seeds = g.seeds;
            run.method_trace = g.trace;
            run.select_seconds = t0.elapsed().as_secs_f64();
        }
        Method::Sandwich => {
            let s = sandwich_select(graph, campaigns, spec, k, horizon)?;
            run.seeds = s.seeds.clone();
            run.select_seconds = t0.elapsed().as_secs_f64();
            run.sandwich = Some(s);
        }
        Method::Rw => {
            let o = rw_greedy(graph, campaigns, spec, k, horizon, &params.rw())?;
            run.seeds = o.greedy.seeds;
            run.method_trace = o.greedy.trace;
            run.walkgen_seconds = o.walk_seconds;
            run.select_seconds = o.select_seconds;
            run.store_bytes = o.store_bytes;
            run.provenance = Provenance::Walks(o.lambdas);
        }
        Method::Rs => {
            let theta = resolve_theta(graph, campaigns, spec, k, horizon, params)?;
            let o = rs_greedy(graph, campaigns, spec, k, horizon, theta.theta, params.rng_seed)?;
            run.seeds = o.greedy.seeds;
            run.method_trace = o.greedy.trace;
            run.walkgen_seconds = o.walk_seconds;
            run.select_seconds = o.select_seconds;
            run.store_bytes = o.store_bytes;
            run.provenance = Provenance::Sketches(theta);
        }
        Method::Baseline(b) => {
            let seed = rng::derive(params.rng_seed, rng::TAG_TRIAL);
            run.seeds = baseline_select(graph, spec.target, b, k, seed)?;
            run.select_seconds = t0.elapsed().as_secs_f64();
            run.provenance = Provenance::Baseline;
        }
    }
    Ok(run)
}

/// Exact score of every prefix of `seeds`, starting from the empty set.
pub fn exact_prefix_scores(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    seeds: &[usize],
    horizon: usize,
) -> Result<Vec<f64>> {
    let obj = exact_objective(graph, campaigns, spec, horizon)?;
    Ok((0..=seeds.len()).map(|i| obj.value(&seeds[..i])).collect())
}
