//! Reverse-random-walk estimation of horizon opinions and the walk-based greedy.
//!
//! A walk from `v` ends at node `e`; its value is `b0_e`. Averaged over walks, this
//! is an unbiased estimate of `b(t)_v`. With seeds, a walk is cut at its first seed
//! and then has value 1, which is again unbiased for the seeded opinions.

pub mod store;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use store::{generate_sketches, generate_walks, walk_into, WalkStore};

use crate::campaign::{CampaignState, SeedSet};
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::rng;
use crate::scores::{copeland_from_margins, ScoreKind, ScoreSpec, TargetScorer};
use crate::selection::{check_campaigns, exact_scorer, greedy, GreedyResult, Objective};

pub const DEFAULT_GAP_FLOOR: f64 = 1e-3;

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

fn ceil_count(x: f64) -> usize {
    x.ceil().max(1.0) as usize
}

/// Walks per node so that every cumulative-score opinion estimate is within `delta`
/// with probability at least `rho`: `ceil(ln(2 / (1 - rho)) / (2 delta^2))`.
pub fn lambda_cumulative(delta: f64, rho: f64) -> Result<usize> {
    check_positive("delta", delta)?;
    check_rho(rho)?;
    Ok(ceil_count((2.0 / (1.0 - rho)).ln() / (2.0 * delta * delta)))
}

/// Walks per node for rank-based scores given the opinion gap `gamma`.
pub fn lambda_rank(gamma: f64, rho: f64) -> Result<usize> {
    check_positive("gamma", gamma)?;
    check_rho(rho)?;
    Ok(ceil_count((2.0 / (1.0 - rho)).ln() / (2.0 * gamma * gamma)))
}

/// Walks per node for Copeland given the opinion gap `gamma`.
pub fn lambda_copeland(gamma: f64, rho: f64) -> Result<usize> {
    check_positive("gamma", gamma)?;
    check_rho(rho)?;
    Ok(ceil_count((1.0 / (1.0 - rho)).ln() / (2.0 * gamma * gamma)))
}

/// Mean value of `v`'s walks with truncation at the first member of `seeds`.
pub fn estimate_opinion(store: &WalkStore, initial: &[f64], seeds: &SeedSet, v: usize) -> Result<f64> {
    if v >= store.node_count() {
        return Err(Error::NodeOutOfRange {
            node: v,
            n: store.node_count(),
        });
    }
    let groups: Vec<usize> = (0..store.group_count()).filter(|&g| store.group_node(g) == v).collect();
    let mask = seeds.mask(store.node_count());
    let mut sum = 0.0;
    let mut count = 0usize;
    for g in groups {
        for w in store.group_walks(g) {
            sum += store.walk_value_for(w, initial, &mask);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoWalks(v));
    }
    Ok(sum / count as f64)
}

/// How a group estimate turns into score.
#[derive(Debug, Clone)]
pub enum GroupEval {
    /// `sum_g a[node_g] * est_g`.
    Weighted(Vec<f64>),
    /// Rank-based or Copeland score against fixed non-target opinions.
    Score(TargetScorer),
}

/// Set function estimated from a walk store.
///
/// Additive scores: `scale * sum_g value(node_g, est_g)`. Copeland: pairwise contests
/// decided by the sign counts over groups. Greedy gains come from the inverted index,
/// reading only the walks that contain each candidate node.
#[derive(Debug, Clone)]
pub struct WalkObjective {
    store: WalkStore,
    initial: Vec<f64>,
    eval: GroupEval,
    scale: f64,
    est: Vec<f64>,
    margins: Vec<i64>,
    /// Weighted objectives only: current gain of every node, kept in step with commits.
    linear_gains: Option<Vec<f64>>,
}

impl WalkObjective {
    pub fn new(store: WalkStore, initial: Vec<f64>, eval: GroupEval, scale: f64) -> Self {
        let mut obj = WalkObjective {
            est: vec![0.0; store.group_count()],
            store,
            initial,
            eval,
            scale,
            margins: Vec::new(),
            linear_gains: None,
        };
        obj.refresh();
        obj
    }

    /// Recomputes cached estimates from the store's truncation state.
    fn refresh(&mut self) {
        for g in 0..self.store.group_count() {
            let r = self.store.group_walks(g);
            let len = r.len() as f64;
            self.est[g] = r.map(|w| self.store.walk_value(w, &self.initial)).sum::<f64>() / len;
        }
        if let GroupEval::Score(s) = &self.eval {
            if s.spec().kind == ScoreKind::Copeland {
                self.margins = self.margins_of(&self.est);
            }
        }
        if let GroupEval::Weighted(_) = &self.eval {
            let mut gains = vec![0.0; self.store.node_count()];
            for w in 0..self.store.walk_count() {
                if !self.store.is_cut(w) {
                    let c = self.walk_gain(w);
                    for_each_distinct(self.store.walk(w), |u| gains[u] += c);
                }
            }
            self.linear_gains = Some(gains);
        }
    }

    /// Gain any node of uncut walk `w` collects from it under a weighted objective.
    fn walk_gain(&self, w: usize) -> f64 {
        let g = self.store.group_of(w);
        let y = self.store.walk_value(w, &self.initial);
        self.scale * self.group_value(g, (1.0 - y) / self.store.group_size(g) as f64)
    }

    pub fn store(&self) -> &WalkStore {
        &self.store
    }

    pub fn into_store(self) -> WalkStore {
        self.store
    }

    /// Current group estimates.
    pub fn estimates(&self) -> &[f64] {
        &self.est
    }

    fn is_copeland(&self) -> bool {
        matches!(&self.eval, GroupEval::Score(s) if s.spec().kind == ScoreKind::Copeland)
    }

    #[inline]
    fn group_value(&self, g: usize, x: f64) -> f64 {
        let v = self.store.group_node(g);
        match &self.eval {
            GroupEval::Weighted(a) => a[v] * x,
            GroupEval::Score(s) => s.node_value(v, x),
        }
    }

    fn scorer(&self) -> &TargetScorer {
        match &self.eval {
            GroupEval::Score(s) => s,
            GroupEval::Weighted(_) => unreachable!("weighted objectives have no contests"),
        }
    }

    fn margins_of(&self, est: &[f64]) -> Vec<i64> {
        let s = self.scorer();
        (0..s.other_count())
            .map(|i| {
                (0..est.len())
                    .map(|g| s.pair_sign(i, self.store.group_node(g), est[g]))
                    .sum()
            })
            .collect()
    }

    fn total(&self, est: &[f64]) -> f64 {
        if self.is_copeland() {
            copeland_from_margins(&self.margins_of(est))
        } else {
            self.scale * (0..est.len()).map(|g| self.group_value(g, est[g])).sum::<f64>()
        }
    }

    /// Group estimates for an arbitrary seed set, ignoring the truncation state.
    pub fn estimates_for(&self, seeds: &[usize]) -> Vec<f64> {
        let mut mask = vec![false; self.store.node_count()];
        for &s in seeds {
            mask[s] = true;
        }
        (0..self.store.group_count())
            .map(|g| self.store.group_estimate(g, &self.initial, &mask))
            .collect()
    }

    /// Visits the change in each affected group's estimate if `u` became a seed, given
    /// the current truncation state.
    fn for_each_group_delta(&self, u: usize, mut f: impl FnMut(usize, f64)) {
        let mut cur_group = usize::MAX;
        let mut acc = 0.0;
        for (w, _) in self.store.occurrences(u) {
            if self.store.is_cut(w) {
                continue;
            }
            let g = self.store.group_of(w);
            if g != cur_group {
                if cur_group != usize::MAX {
                    f(cur_group, acc);
                }
                cur_group = g;
                acc = 0.0;
            }
            let y = self.store.walk_value(w, &self.initial);
            acc += (1.0 - y) / self.store.group_size(g) as f64;
        }
        if cur_group != usize::MAX {
            f(cur_group, acc);
        }
    }

    fn gain_of(&self, u: usize) -> f64 {
        if let Some(gains) = &self.linear_gains {
            return gains[u];
        }
        if self.is_copeland() {
            let s = self.scorer();
            let mut delta = vec![0i64; self.margins.len()];
            self.for_each_group_delta(u, |g, d| {
                let v = self.store.group_node(g);
                let (old, new) = (self.est[g], (self.est[g] + d).min(1.0));
                for (i, m) in delta.iter_mut().enumerate() {
                    *m += s.pair_sign(i, v, new) - s.pair_sign(i, v, old);
                }
            });
            let after: Vec<i64> = self.margins.iter().zip(&delta).map(|(a, b)| a + b).collect();
            copeland_from_margins(&after) - copeland_from_margins(&self.margins)
        } else {
            let mut gain = 0.0;
            self.for_each_group_delta(u, |g, d| {
                let (old, new) = (self.est[g], (self.est[g] + d).min(1.0));
                gain += self.group_value(g, new) - self.group_value(g, old);
            });
            self.scale * gain
        }
    }

    /// Copeland margins after additionally seeding `u`.
    pub fn margins_with(&self, u: usize) -> Vec<i64> {
        let s = self.scorer();
        let mut after = self.margins.clone();
        self.for_each_group_delta(u, |g, d| {
            let v = self.store.group_node(g);
            let (old, new) = (self.est[g], (self.est[g] + d).min(1.0));
            for (i, m) in after.iter_mut().enumerate() {
                *m += s.pair_sign(i, v, new) - s.pair_sign(i, v, old);
            }
        });
        after
    }

    pub fn current_margins(&self) -> &[i64] {
        &self.margins
    }
}

impl Objective for WalkObjective {
    fn node_count(&self) -> usize {
        self.store.node_count()
    }

    fn value(&self, seeds: &[usize]) -> f64 {
        self.total(&self.estimates_for(seeds))
    }

    fn committed_value(&self, _seeds: &[usize]) -> f64 {
        if self.is_copeland() {
            copeland_from_margins(&self.margins)
        } else {
            self.total(&self.est)
        }
    }

    fn gains(&self, _seeds: &[usize], candidates: &[usize]) -> Vec<f64> {
        candidates.par_iter().map(|&u| self.gain_of(u)).collect()
    }

    fn commit(&mut self, s: usize) {
        if let Some(mut gains) = self.linear_gains.take() {
            for &w in self.store.occurrences(s).map(|(w, _)| w).collect::<Vec<_>>().iter() {
                if !self.store.is_cut(w) {
                    let c = self.walk_gain(w);
                    for_each_distinct(self.store.walk(w), |u| gains[u] -= c);
                }
            }
            self.linear_gains = Some(gains);
        }
        let newly = self.store.truncate_at(s);
        let copeland = self.is_copeland();
        let mut changed: Vec<(usize, f64)> = Vec::new();
        for w in newly {
            let g = self.store.group_of(w);
            let before = self.initial[*self.store.walk(w).last().unwrap() as usize];
            if copeland {
                changed.push((g, self.est[g]));
            }
            self.est[g] = (self.est[g] + (1.0 - before) / self.store.group_size(g) as f64).min(1.0);
        }
        if copeland && !changed.is_empty() {
            // first recorded value of each group is its estimate before this commit
            changed.sort_by_key(|&(g, _)| g);
            changed.dedup_by_key(|&mut (g, _)| g);
            let s = self.scorer().clone();
            for (g, old) in changed {
                let v = self.store.group_node(g);
                for (i, m) in self.margins.iter_mut().enumerate() {
                    *m += s.pair_sign(i, v, self.est[g]) - s.pair_sign(i, v, old);
                }
            }
        }
    }
}

/// Calls `f` once per distinct node of a walk.
fn for_each_distinct(walk: &[u32], mut f: impl FnMut(usize)) {
    for (i, &u) in walk.iter().enumerate() {
        if !walk[..i].contains(&u) {
            f(u as usize);
        }
    }
}

/// Per-node minimum gap between the target estimate and the exact non-target opinions.
fn gap(scorer: &TargetScorer, v: usize, x: f64) -> f64 {
    scorer
        .other_rows()
        .iter()
        .map(|row| (row[v] - x).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Greedy estimate of the smallest opinion gap each node can be driven to by up to `k`
/// seeds. Each node uses its own `alpha` walks; at every step the seed that lowers
/// that node's gap the most is added, stopping at `k` seeds or when no seed lowers it.
/// A single candidate has no rivals, so every gap is 1.
pub fn estimate_gamma_star(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    target: usize,
    k: usize,
    horizon: usize,
    alpha: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    check_campaigns(graph, campaigns)?;
    let n = graph.node_count();
    if campaigns.len() == 1 {
        return Ok(vec![1.0; n]);
    }
    let spec = ScoreSpec::plurality(target);
    let scorer = exact_scorer(graph, campaigns, &spec, horizon)?;
    let state = &campaigns[target];
    let seed = rng::derive(rng_seed, rng::TAG_GAP);
    let gaps = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut walks: Vec<Vec<u32>> = Vec::with_capacity(alpha);
            for i in 0..alpha {
                let mut buf = Vec::new();
                let mut r = rng::stream(seed, v as u64, i as u64);
                walk_into(graph, state, v, horizon, &mut r, &mut buf);
                walks.push(buf);
            }
            let values: Vec<f64> = walks
                .iter()
                .map(|w| state.initial[*w.last().unwrap() as usize])
                .collect();
            let mut cut = vec![false; alpha];
            let mut est = values.iter().sum::<f64>() / alpha as f64;
            let mut best = gap(&scorer, v, est);
            for _ in 0..k {
                let mut delta: std::collections::BTreeMap<u32, f64> = Default::default();
                for (i, w) in walks.iter().enumerate() {
                    if cut[i] {
                        continue;
                    }
                    let mut seen: Vec<u32> = Vec::with_capacity(w.len());
                    for &u in w {
                        if !seen.contains(&u) {
                            seen.push(u);
                            *delta.entry(u).or_default() += (1.0 - values[i]) / alpha as f64;
                        }
                    }
                }
                let pick = delta
                    .iter()
                    .map(|(&u, &d)| (u, gap(&scorer, v, (est + d).min(1.0))))
                    .fold(None, |acc: Option<(u32, f64)>, (u, g)| match acc {
                        Some((_, bg)) if bg <= g => acc,
                        _ => Some((u, g)),
                    });
                match pick {
                    Some((u, g)) if g < best => {
                        est = (est + delta[&u]).min(1.0);
                        best = g;
                        for (i, w) in walks.iter().enumerate() {
                            if !cut[i] && w.contains(&u) {
                                cut[i] = true;
                            }
                        }
                    }
                    _ => break,
                }
            }
            best
        })
        .collect();
    Ok(gaps)
}

#[derive(Debug, Clone, Serialize)]
pub struct RwParams {
    pub delta: f64,
    pub rho: f64,
    pub rng_seed: u64,
    /// Walks per node for gap estimation; defaults to the cumulative count.
    pub alpha: Option<usize>,
    pub gap_floor: f64,
    /// Cap on per-node walk counts; defaults to `10 * lambda_cumulative(0.05, rho)`.
    pub lambda_cap: Option<usize>,
}

impl RwParams {
    pub fn new(delta: f64, rho: f64, rng_seed: u64) -> Self {
        RwParams {
            delta,
            rho,
            rng_seed,
            alpha: None,
            gap_floor: DEFAULT_GAP_FLOOR,
            lambda_cap: None,
        }
    }

    pub fn cap(&self) -> Result<usize> {
        match self.lambda_cap {
            Some(c) => Ok(c),
            None => Ok(10 * lambda_cumulative(0.05, self.rho)?),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSummary {
    pub rule: String,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub total_walks: usize,
    pub capped_nodes: usize,
}

/// Per-node walk counts for `spec` following its concentration bound.
pub fn lambdas_for(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    params: &RwParams,
) -> Result<(Vec<usize>, LambdaSummary)> {
    let n = graph.node_count();
    let cap = params.cap()?;
    let (lambdas, rule, capped) = match spec.kind {
        ScoreKind::Cumulative => {
            let l = lambda_cumulative(params.delta, params.rho)?;
            (vec![l; n], format!("cumulative(delta={}, rho={})", params.delta, params.rho), 0)
        }
        kind => {
            let alpha = match params.alpha {
                Some(a) => a,
                None => lambda_cumulative(params.delta, params.rho)?,
            };
            let gaps = estimate_gamma_star(graph, campaigns, spec.target, k, horizon, alpha, params.rng_seed)?;
            let mut capped = 0;
            let mut ls = Vec::with_capacity(n);
            for g in gaps {
                let g = g.max(params.gap_floor);
                let l = if kind == ScoreKind::Copeland {
                    lambda_copeland(g, params.rho)?
                } else {
                    lambda_rank(g, params.rho)?
                };
                if l > cap {
                    capped += 1;
                }
                ls.push(l.min(cap));
            }
            let name = if kind == ScoreKind::Copeland { "copeland" } else { "rank" };
            (
                ls,
                format!(
                    "{name}(gap estimate, alpha={alpha}, floor={}, cap={cap}, rho={})",
                    params.gap_floor, params.rho
                ),
                capped,
            )
        }
    };
    let total: usize = lambdas.iter().sum();
    let summary = LambdaSummary {
        rule,
        min: lambdas.iter().copied().min().unwrap_or(0),
        max: lambdas.iter().copied().max().unwrap_or(0),
        mean: total as f64 / n.max(1) as f64,
        total_walks: total,
        capped_nodes: capped,
    };
    Ok((lambdas, summary))
}

/// Walk-estimated objective for `spec` over a per-node store.
pub fn walk_objective(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
    store: WalkStore,
) -> Result<WalkObjective> {
    let initial = campaigns[spec.target].initial.clone();
    let eval = match spec.kind {
        ScoreKind::Cumulative => GroupEval::Weighted(vec![1.0; graph.node_count()]),
        _ => GroupEval::Score(exact_scorer(graph, campaigns, spec, horizon)?),
    };
    Ok(WalkObjective::new(store, initial, eval, 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct RwOutcome {
    pub greedy: GreedyResult,
    pub lambdas: LambdaSummary,
    pub walk_seconds: f64,
    pub select_seconds: f64,
    pub store_bytes: usize,
}

/// Walk-based greedy: size walk counts per the score's bound, generate walks once
/// without seeds, then run `k` greedy rounds with truncation after each pick.
pub fn rw_greedy(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    params: &RwParams,
) -> Result<RwOutcome> {
    check_campaigns(graph, campaigns)?;
    spec.validate(graph.candidate_count())?;
    let t0 = Instant::now();
    let (lambdas, summary) = lambdas_for(graph, campaigns, spec, k, horizon, params)?;
    let store = generate_walks(graph, &campaigns[spec.target], horizon, &lambdas, params.rng_seed)?;
    let walk_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut obj = walk_objective(graph, campaigns, spec, horizon, store)?;
    let result = greedy(&mut obj, k)?;
    let select_seconds = t1.elapsed().as_secs_f64();
    Ok(RwOutcome {
        greedy: result,
        lambdas: summary,
        walk_seconds,
        select_seconds,
        store_bytes: obj.store().memory_bytes(),
    })
}
