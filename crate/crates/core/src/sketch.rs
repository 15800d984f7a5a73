//! Sketch estimation: single reverse walks from uniformly sampled start nodes, the
//! sample-count rules per score, and the sketch-based greedy.

use std::time::Instant;

use serde::Serialize;

use crate::campaign::{CampaignState, SeedSet};
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::rng;
use crate::scores::{ScoreKind, ScoreSpec};
use crate::selection::baselines::{top_k, weighted_out_degree};
use crate::selection::brute::ln_binomial;
use crate::selection::{check_campaigns, exact_objective, exact_scorer, greedy, GreedyResult, Objective};
use crate::walks::{generate_sketches, generate_walks, GroupEval, WalkObjective, WalkStore};

/// `(n / theta) * sum_j Y_j` with each sketch truncated at its first member of `seeds`.
pub fn estimate_cumulative(store: &WalkStore, initial: &[f64], seeds: &SeedSet) -> f64 {
    let mask = seeds.mask(store.node_count());
    let theta = store.walk_count() as f64;
    let sum: f64 = (0..store.walk_count())
        .map(|w| store.walk_value_for(w, initial, &mask))
        .sum();
    store.node_count() as f64 / theta * sum
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon = {eps} must be positive")));
    }
    Ok(())
}

/// Sample count making sketch-greedy a `(1 - 1/e - eps)`-approximation for the
/// cumulative score with probability at least `1 - n^-l`:
/// `2n / (OPT eps^2) * ((1 - 1/e) sqrt(ln 2n^l) + sqrt((1 - 1/e)(ln 2n^l + ln C(n, k))))^2`.
pub fn theta_cumulative(n: usize, k: usize, opt_lb: f64, eps: f64, l: f64) -> Result<usize> {
    if !(opt_lb > 0.0) {
        return Err(Error::InvalidArgument(format!("OPT lower bound {opt_lb} must be positive")));
    }
    check_eps(eps)?;
    let nf = n as f64;
    let a = 1.0 - (-1.0f64).exp();
    let ln_term = 2f64.ln() + l * nf.ln();
    let bracket = a * ln_term.sqrt() + (a * (ln_term + ln_binomial(n, k))).sqrt();
    let theta = 2.0 * nf / (opt_lb * eps * eps) * bracket * bracket;
    Ok(theta.ceil().max(1.0) as usize)
}

/// Result of scanning a sample-count inequality `g(theta) >= 1 - 1 / M`. The scan
/// runs on the deficit `1 - g`, which stays representable when `1 / M` is below
/// the rounding step of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaScan {
    pub theta: u64,
    /// `ln(1 - g(theta))`.
    pub ln_deficit: f64,
    /// `-ln M`; feasible counts have `ln_deficit <= ln_deficit_target`.
    pub ln_deficit_target: f64,
}

/// Upper end of every scan.
pub const THETA_SCAN_MAX: u64 = 1 << 52;

/// Smallest `theta >= 1` with `ln_d(theta) <= ln_d_target`, for a deficit that
/// falls to a single minimum and rises after it.
fn scan_deficit(ln_d: impl Fn(u64) -> f64, ln_d_target: f64) -> Result<ThetaScan> {
    let falling = |x: u64| ln_d(x + 1) < ln_d(x);
    let bottom = if !falling(1) {
        1
    } else {
        let mut hi = 2u64;
        while hi < THETA_SCAN_MAX && falling(hi) {
            hi = (hi * 2).min(THETA_SCAN_MAX);
        }
        let mut lo = hi / 2;
        // falling(lo) holds, falling(hi) fails or hi is the cap
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if falling(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let best = ln_d(bottom);
    if !(best <= ln_d_target) {
        return Err(Error::InfeasibleTheta {
            max_lhs: -best.exp_m1(),
            target: -ln_d_target.exp_m1(),
        });
    }
    let (mut lo, mut hi) = (0u64, bottom);
    if ln_d(1) <= ln_d_target {
        hi = 1;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_d(mid) <= ln_d_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThetaScan {
        theta: hi,
        ln_deficit: ln_d(hi),
        ln_deficit_target: ln_d_target,
    })
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln(1 - rho^theta (1 - y))` from `theta ln rho` and `ln y`; exceeds 0 when `y > 1`.
fn ln_deficit(a: f64, ln_y: f64) -> f64 {
    // 1 - e^a (1 - y) = (1 - e^a) + e^a y
    ln_add_exp((-a.exp_m1()).ln(), a + ln_y)
}

fn check_scan_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, 1]")));
    }
    Ok(())
}

/// `ln(C(n, k) n^l extra)`.
fn ln_scan_bound(n: usize, k: usize, l: f64, extra: f64) -> f64 {
    ln_binomial(n, k) + l * (n as f64).ln() + extra.ln()
}

/// `ln(1 - g(theta))` with `g(theta) = rho^theta (1 - 2 exp(-eps^2 OPT theta / ((8 + 2 eps) n)))`.
pub fn ln_deficit_rank(theta: u64, n: usize, opt_lb: f64, eps: f64, rho: f64) -> f64 {
    let c = eps * eps * opt_lb / ((8.0 + 2.0 * eps) * n as f64);
    let th = theta as f64;
    ln_deficit(th * rho.ln(), 2f64.ln() - c * th)
}

/// `ln(1 - g(theta))` with `g(theta) = rho^theta (1 - (1 - mu^2)^(theta / 2))`.
pub fn ln_deficit_copeland(theta: u64, mu: f64, rho: f64) -> f64 {
    let th = theta as f64;
    ln_deficit(th * rho.ln(), th / 2.0 * (-mu * mu).ln_1p())
}

pub fn rank_target(n: usize, k: usize, l: f64) -> f64 {
    -(-ln_scan_bound(n, k, l, 1.0)).exp_m1()
}

pub fn copeland_target(n: usize, k: usize, r: usize, l: f64) -> f64 {
    -(-ln_scan_bound(n, k, l, (r.max(2) - 1) as f64)).exp_m1()
}

/// Smallest `theta` with `g(theta) >= 1 - 1 / (C(n, k) n^l)` for the rank-based scores.
/// `r` does not enter this inequality; it is accepted for symmetry with Copeland.
pub fn theta_scan_rank(
    n: usize,
    k: usize,
    _r: usize,
    opt_lb: f64,
    eps: f64,
    l: f64,
    rho: f64,
) -> Result<ThetaScan> {
    if !(opt_lb > 0.0) {
        return Err(Error::InvalidArgument(format!("OPT lower bound {opt_lb} must be positive")));
    }
    check_eps(eps)?;
    check_scan_rho(rho)?;
    scan_deficit(|th| ln_deficit_rank(th, n, opt_lb, eps, rho), -ln_scan_bound(n, k, l, 1.0))
}

/// Closed form of the rank scan at `rho = 1`:
/// `ceil((8 + 2 eps) n / (eps^2 OPT) * (ln 2 + ln C(n, k) + l ln n))`.
pub fn theta_rank_closed_form(n: usize, k: usize, opt_lb: f64, eps: f64, l: f64) -> u64 {
    let c = (8.0 + 2.0 * eps) * n as f64 / (eps * eps * opt_lb);
    (c * (2f64.ln() + ln_binomial(n, k) + l * (n as f64).ln())).ceil() as u64
}

/// Smallest `theta` with `g(theta) >= 1 - 1 / (C(n, k) n^l (r - 1))` for Copeland.
pub fn theta_scan_copeland(n: usize, k: usize, r: usize, mu_star: f64, l: f64, rho: f64) -> Result<ThetaScan> {
    if !(0.0..=1.0).contains(&mu_star) {
        return Err(Error::InvalidArgument(format!("mu = {mu_star} outside [0, 1]")));
    }
    check_scan_rho(rho)?;
    scan_deficit(
        |th| ln_deficit_copeland(th, mu_star, rho),
        -ln_scan_bound(n, k, l, (r.max(2) - 1) as f64),
    )
}

/// Builds the sketch objective: additive scores scale by `n / theta`, Copeland
/// decides each contest by a majority over the sampled start nodes.
pub fn sketch_objective(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
    store: WalkStore,
) -> Result<WalkObjective> {
    let n = graph.node_count() as f64;
    let theta = store.walk_count() as f64;
    let initial = campaigns[spec.target].initial.clone();
    let eval = match spec.kind {
        ScoreKind::Cumulative => GroupEval::Weighted(vec![1.0; graph.node_count()]),
        _ => GroupEval::Score(exact_scorer(graph, campaigns, spec, horizon)?),
    };
    Ok(WalkObjective::new(store, initial, eval, n / theta))
}

#[derive(Debug, Clone, Serialize)]
pub struct OptProbe {
    pub x: f64,
    pub theta: usize,
    pub estimate: f64,
    pub threshold: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptLowerBound {
    pub value: f64,
    pub probes: Vec<OptProbe>,
}

/// `beta > 0` solving `beta^2 theta p = L (2 + 2 beta / 3)`.
fn upper_tail_beta(theta: f64, p: f64, ln_inv_fail: f64) -> f64 {
    let a = theta * p;
    let b = 2.0 * ln_inv_fail / 3.0;
    let c = 2.0 * ln_inv_fail;
    (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Halving scan `x = n/2, n/4, ...` down to `k`. At each `x`, estimates the score of
/// the top-`k` weighted-out-degree seeds from `ceil(2n / (x 0.25^2) ln 2n)` sketches
/// and accepts when the estimate clears `x (1 + beta)`, the level a set with true score
/// below `x` exceeds with probability at most 0.01. Falls back to `k`.
pub fn estimate_opt_lower_bound(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    rng_seed: u64,
) -> Result<OptLowerBound> {
    check_campaigns(graph, campaigns)?;
    if !spec.kind.is_additive() {
        return Err(Error::InvalidScore("the OPT lower bound applies to additive scores".into()));
    }
    let n = graph.node_count();
    let nf = n as f64;
    let seeds = top_k(&weighted_out_degree(graph, spec.target), k);
    let seed = rng::derive(rng_seed, rng::TAG_OPT_TEST);
    let ln_inv_fail = 100f64.ln();
    let mut probes = Vec::new();
    let mut x = nf / 2.0;
    let mut round = 0u64;
    while x >= k as f64 && x > 0.0 {
        let theta = ((2.0 * nf / (x * 0.25 * 0.25)) * (2.0 * nf).ln()).ceil() as usize;
        let store = generate_sketches(graph, &campaigns[spec.target], horizon, theta.max(1), seed ^ round)?;
        let obj = sketch_objective(graph, campaigns, spec, horizon, store)?;
        let estimate = obj.value(&seeds);
        let beta = upper_tail_beta(theta as f64, x / nf, ln_inv_fail);
        let threshold = x * (1.0 + beta);
        let accepted = estimate >= threshold;
        probes.push(OptProbe {
            x,
            theta,
            estimate,
            threshold,
            accepted,
        });
        if accepted {
            return Ok(OptLowerBound { value: x, probes });
        }
        x /= 2.0;
        round += 1;
    }
    Ok(OptLowerBound {
        value: (k as f64).max(f64::MIN_POSITIVE),
        probes,
    })
}

/// Greedy estimate of the smallest normalized Copeland margin reachable with up to `k`
/// seeds, from `alpha` walks per node.
pub fn estimate_mu_star(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    target: usize,
    k: usize,
    horizon: usize,
    alpha: usize,
    rng_seed: u64,
) -> Result<f64> {
    check_campaigns(graph, campaigns)?;
    let n = graph.node_count();
    if campaigns.len() == 1 {
        return Ok(1.0);
    }
    let spec = ScoreSpec::copeland(target);
    let store = generate_walks(
        graph,
        &campaigns[target],
        horizon,
        &vec![alpha; n],
        rng::derive(rng_seed, rng::TAG_GAP),
    )?;
    let mut obj = crate::walks::walk_objective(graph, campaigns, &spec, horizon, store)?;
    let mu = |m: &[i64]| m.iter().map(|x| x.unsigned_abs()).min().unwrap_or(n as u64) as f64 / n as f64;
    let mut best = mu(obj.current_margins());
    let mut chosen = vec![false; n];
    for _ in 0..k {
        let pick = (0..n)
            .filter(|&u| !chosen[u])
            .map(|u| (u, mu(&obj.margins_with(u))))
            .fold(None, |acc: Option<(usize, f64)>, (u, m)| match acc {
                Some((_, bm)) if bm <= m => acc,
                _ => Some((u, m)),
            });
        match pick {
            Some((u, m)) if m < best => {
                best = m;
                chosen[u] = true;
                obj.commit(u);
            }
            _ => break,
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct RsOutcome {
    pub greedy: GreedyResult,
    pub theta: usize,
    pub walk_seconds: f64,
    pub select_seconds: f64,
    pub store_bytes: usize,
}

/// Sketch-based greedy with `theta` sketches.
pub fn rs_greedy(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    theta: usize,
    rng_seed: u64,
) -> Result<RsOutcome> {
    check_campaigns(graph, campaigns)?;
    spec.validate(graph.candidate_count())?;
    let t0 = Instant::now();
    let store = generate_sketches(graph, &campaigns[spec.target], horizon, theta, rng_seed)?;
    let walk_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut obj = sketch_objective(graph, campaigns, spec, horizon, store)?;
    let result = greedy(&mut obj, k)?;
    Ok(RsOutcome {
        greedy: result,
        theta,
        walk_seconds,
        select_seconds: t1.elapsed().as_secs_f64(),
        store_bytes: obj.store().memory_bytes(),
    })
}

pub const HEURISTIC_THETA_START: usize = 1 << 10;
pub const HEURISTIC_THETA_MAX: usize = 1 << 22;
pub const HEURISTIC_PROBE_K: usize = 100;
pub const HEURISTIC_PROBE_T: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct HeuristicTheta {
    pub theta: usize,
    /// `(theta, exact score of the sketch-greedy seeds)` per doubling step.
    pub steps: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Doubles `theta` from `2^10` until the exact score of the sketch-greedy seeds moves by
/// less than 1% between consecutive steps, and returns the smaller of the two. Probes at
/// `k = min(100, n)`, `t = 20`.
pub fn heuristic_theta(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    rng_seed: u64,
) -> Result<HeuristicTheta> {
    heuristic_theta_with(
        graph,
        campaigns,
        spec,
        HEURISTIC_PROBE_K.min(graph.node_count()),
        HEURISTIC_PROBE_T,
        HEURISTIC_THETA_MAX,
        rng_seed,
    )
}

pub fn heuristic_theta_with(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    probe_k: usize,
    probe_t: usize,
    max_theta: usize,
    rng_seed: u64,
) -> Result<HeuristicTheta> {
    let exact = exact_objective(graph, campaigns, spec, probe_t)?;
    let mut steps = Vec::new();
    let mut theta = HEURISTIC_THETA_START;
    let mut prev: Option<f64> = None;
    loop {
        let r = rs_greedy(graph, campaigns, spec, probe_k, probe_t, theta, rng_seed)?;
        let f = exact.value(&r.greedy.seeds);
        steps.push((theta, f));
        if let Some(p) = prev {
            let change = if p == 0.0 { if f == 0.0 { 0.0 } else { f64::INFINITY } } else { (f - p).abs() / p.abs() };
            if change < 0.01 {
                return Ok(HeuristicTheta {
                    theta: theta / 2,
                    steps,
                    converged: true,
                });
            }
        }
        if theta >= max_theta {
            return Ok(HeuristicTheta {
                theta,
                steps,
                converged: false,
            });
        }
        prev = Some(f);
        theta *= 2;
    }
}
