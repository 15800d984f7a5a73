//! Greedy seed selection over an abstract set function, with exact evaluation,
//! brute force, sandwich bounds, minimum winning size, and static baselines.

pub mod baselines;
pub mod bounds;
pub mod brute;
pub mod minwin;
pub mod sandwich;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use crate::campaign::{CampaignState, SeedSet};
use crate::diffusion::{snapshot, Propagator};
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::scores::{ScoreKind, ScoreSpec, TargetScorer};

/// A set function over seed sets of the target candidate.
///
/// `gains` receives the seeds committed so far (in order) and must return
/// `F(S + v) - F(S)` for every `v` in `candidates`. `commit` is called once per
/// greedy round with the chosen node, after which `seeds` has grown by one.
pub trait Objective: Sync {
    fn node_count(&self) -> usize;

    fn value(&self, seeds: &[usize]) -> f64;

    fn gains(&self, seeds: &[usize], candidates: &[usize]) -> Vec<f64> {
        let base = self.value(seeds);
        candidates
            .par_iter()
            .map(|&v| {
                let mut s = seeds.to_vec();
                s.push(v);
                self.value(&s) - base
            })
            .collect()
    }

    fn commit(&mut self, _v: usize) {}

    /// Value of `seeds` when they are exactly the nodes committed so far, in order.
    fn committed_value(&self, seeds: &[usize]) -> f64 {
        self.value(seeds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyResult {
    pub seeds: Vec<usize>,
    /// Objective value after each insertion.
    pub trace: Vec<f64>,
    /// Value of the empty set.
    pub base: f64,
    /// Number of set-function evaluations (or gain computations).
    pub evaluations: usize,
}

impl GreedyResult {
    pub fn seed_set(&self, candidate: usize) -> SeedSet {
        SeedSet::new(candidate, self.seeds.clone()).expect("greedy never repeats a node")
    }

    pub fn final_value(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.base)
    }
}

/// Index of the largest value; ties resolve to the smallest position. Candidates are
/// kept in ascending node order, so that is the smallest node id.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &g) in values.iter().enumerate().skip(1) {
        if g > values[best] {
            best = i;
        }
    }
    best
}

/// `k` rounds of the largest marginal gain, smallest node id on equal gains.
pub fn greedy<O: Objective + ?Sized>(obj: &mut O, k: usize) -> Result<GreedyResult> {
    let n = obj.node_count();
    if k > n {
        return Err(Error::InvalidArgument(format!("budget k = {k} exceeds n = {n}")));
    }
    let base = obj.value(&[]);
    let mut seeds = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let mut trace = Vec::with_capacity(k);
    let mut evaluations = 1;
    for _ in 0..k {
        let candidates: Vec<usize> = (0..n).filter(|&v| !chosen[v]).collect();
        let gains = obj.gains(&seeds, &candidates);
        evaluations += candidates.len();
        let i = argmax_first(&gains);
        let v = candidates[i];
        chosen[v] = true;
        seeds.push(v);
        obj.commit(v);
        trace.push(obj.committed_value(&seeds));
        evaluations += 1;
    }
    Ok(GreedyResult {
        seeds,
        trace,
        base,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy)]
struct Lazy {
    gain: f64,
    node: usize,
    round: usize,
}

impl PartialEq for Lazy {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Lazy {}

impl PartialOrd for Lazy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Lazy {
    // max-heap on gain, then smallest node id
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy-forward greedy. Produces the same sequence as [`greedy`] when the objective
/// is monotone submodular; stale gains are upper bounds on current ones.
pub fn celf<O: Objective + ?Sized>(obj: &mut O, k: usize) -> Result<GreedyResult> {
    let n = obj.node_count();
    if k > n {
        return Err(Error::InvalidArgument(format!("budget k = {k} exceeds n = {n}")));
    }
    let base = obj.value(&[]);
    let all: Vec<usize> = (0..n).collect();
    let mut evaluations = 1;
    let mut heap: BinaryHeap<Lazy> = if k == 0 {
        BinaryHeap::new()
    } else {
        evaluations += n;
        obj.gains(&[], &all)
            .into_iter()
            .enumerate()
            .map(|(node, gain)| Lazy { gain, node, round: 0 })
            .collect()
    };
    let mut seeds = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    let mut current = base;
    while seeds.len() < k {
        let top = heap.pop().expect("heap holds every unchosen node");
        let round = seeds.len();
        if top.round == round {
            seeds.push(top.node);
            obj.commit(top.node);
            current = obj.committed_value(&seeds);
            evaluations += 1;
            trace.push(current);
        } else {
            let mut s = seeds.clone();
            s.push(top.node);
            let gain = obj.value(&s) - current;
            evaluations += 1;
            heap.push(Lazy {
                gain,
                node: top.node,
                round,
            });
        }
    }
    Ok(GreedyResult {
        seeds,
        trace,
        base,
        evaluations,
    })
}

/// Runs CELF when `celf` is set, plain greedy otherwise. CELF is only sound for
/// submodular objectives, so callers gate it on the score kind.
pub fn run_greedy<O: Objective + ?Sized>(obj: &mut O, k: usize, celf_enabled: bool) -> Result<GreedyResult> {
    if celf_enabled {
        celf(obj, k)
    } else {
        greedy(obj, k)
    }
}

/// Rejects CELF for scores that are not submodular.
pub fn check_celf(kind: ScoreKind, celf_requested: bool) -> Result<()> {
    if celf_requested && kind != ScoreKind::Cumulative {
        return Err(Error::InvalidArgument(format!(
            "lazy evaluation is only exact for the cumulative score, not {kind}"
        )));
    }
    Ok(())
}

/// Exact objective: propagate the target with the seeds applied, then apply `eval`
/// to its opinion vector at the horizon.
pub struct ExactObjective<'a, F> {
    graph: &'a InfluenceGraph,
    target: &'a CampaignState,
    horizon: usize,
    eval: F,
}

impl<'a, F> ExactObjective<'a, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(graph: &'a InfluenceGraph, target: &'a CampaignState, horizon: usize, eval: F) -> Self {
        ExactObjective {
            graph,
            target,
            horizon,
            eval,
        }
    }

    /// Target opinions at the horizon for `seeds`.
    pub fn opinions(&self, seeds: &[usize]) -> Vec<f64> {
        Propagator::new()
            .run(self.graph, self.target, seeds, self.horizon)
            .to_vec()
    }
}

impl<F> Objective for ExactObjective<'_, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn value(&self, seeds: &[usize]) -> f64 {
        let mut p = Propagator::new();
        (self.eval)(p.run(self.graph, self.target, seeds, self.horizon))
    }

    fn gains(&self, seeds: &[usize], candidates: &[usize]) -> Vec<f64> {
        let base = self.value(seeds);
        candidates
            .par_iter()
            .map_init(
                || (Propagator::new(), seeds.to_vec()),
                |(p, s), &v| {
                    s.truncate(seeds.len());
                    s.push(v);
                    (self.eval)(p.run(self.graph, self.target, s, self.horizon)) - base
                },
            )
            .collect()
    }
}

/// Scorer for the target against exact no-seed opinions of the other candidates.
pub fn exact_scorer(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
) -> Result<TargetScorer> {
    let snap = snapshot(graph, campaigns, &SeedSet::empty(spec.target), horizon)?;
    TargetScorer::new(&snap, spec)
}

/// Exact score objective for `spec`.
pub fn exact_objective<'a>(
    graph: &'a InfluenceGraph,
    campaigns: &'a [CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
) -> Result<ExactObjective<'a, impl Fn(&[f64]) -> f64 + Sync>> {
    check_campaigns(graph, campaigns)?;
    let scorer = exact_scorer(graph, campaigns, spec, horizon)?;
    Ok(ExactObjective::new(
        graph,
        &campaigns[spec.target],
        horizon,
        move |b: &[f64]| scorer.score(b),
    ))
}

/// Exact score of `seeds` for `spec` at `horizon`.
pub fn exact_score(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    seeds: &[usize],
    horizon: usize,
) -> Result<f64> {
    Ok(exact_objective(graph, campaigns, spec, horizon)?.value(seeds))
}

/// Greedy over exact scores. CELF is rejected for scores other than cumulative.
pub fn greedy_select(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    celf_enabled: bool,
) -> Result<GreedyResult> {
    check_celf(spec.kind, celf_enabled)?;
    let mut obj = exact_objective(graph, campaigns, spec, horizon)?;
    run_greedy(&mut obj, k, celf_enabled)
}

pub(crate) fn check_campaigns(graph: &InfluenceGraph, campaigns: &[CampaignState]) -> Result<()> {
    if campaigns.len() != graph.candidate_count() {
        return Err(Error::InvalidArgument(format!(
            "{} campaigns for {} candidates",
            campaigns.len(),
            graph.candidate_count()
        )));
    }
    for (q, c) in campaigns.iter().enumerate() {
        if c.candidate != q || c.node_count() != graph.node_count() || c.t != 0 {
            return Err(Error::InvalidArgument(format!(
                "campaign {q} does not match the graph or is not at t = 0"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, running_example};

    #[test]
    fn example_cumulative_k1() {
        let (g, cs) = running_example();
        let r = greedy_select(&g, &cs, &ScoreSpec::cumulative(0), 1, 1, false).unwrap();
        assert_eq!(r.seeds, vec![0]);
        assert!((r.final_value() - 3.30).abs() < 1e-12);
    }

    #[test]
    fn example_plurality_k1() {
        let (g, cs) = running_example();
        let r = greedy_select(&g, &cs, &ScoreSpec::plurality(0), 1, 1, false).unwrap();
        assert_eq!(r.seeds, vec![2]);
        assert_eq!(r.final_value(), 4.0);
    }

    #[test]
    fn k_zero_and_errors() {
        let (g, cs) = running_example();
        let r = greedy_select(&g, &cs, &ScoreSpec::cumulative(0), 0, 1, true).unwrap();
        assert!(r.seeds.is_empty());
        assert!((r.final_value() - 2.55).abs() < 1e-12);
        assert!(greedy_select(&g, &cs, &ScoreSpec::cumulative(0), 5, 1, false).is_err());
        assert!(greedy_select(&g, &cs, &ScoreSpec::plurality(0), 1, 1, true).is_err());
    }

    #[test]
    fn celf_matches_plain_on_random_instances() {
        for seed in 0..50 {
            let (g, cs) = random_instance(seed, 8, 2);
            let spec = ScoreSpec::cumulative(0);
            let a = greedy_select(&g, &cs, &spec, 4, 3, false).unwrap();
            let b = greedy_select(&g, &cs, &spec, 4, 3, true).unwrap();
            assert_eq!(a.seeds, b.seeds, "instance {seed}");
            assert!(b.evaluations <= a.evaluations);
        }
    }

    #[test]
    fn greedy_is_deterministic() {
        let (g, cs) = random_instance(9, 10, 3);
        let spec = ScoreSpec::plurality(1);
        let a = greedy_select(&g, &cs, &spec, 3, 2, false).unwrap();
        let b = greedy_select(&g, &cs, &spec, 3, 2, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_resolve_to_smallest_id() {
        // no edges, identical opinions: every node has the same gain
        let g = InfluenceGraph::shared(4, 1, &[]).unwrap();
        let cs = vec![CampaignState::new(0, vec![0.5; 4], vec![0.5; 4]).unwrap()];
        let r = greedy_select(&g, &cs, &ScoreSpec::cumulative(0), 3, 2, false).unwrap();
        assert_eq!(r.seeds, vec![0, 1, 2]);
        let r = greedy_select(&g, &cs, &ScoreSpec::cumulative(0), 3, 2, true).unwrap();
        assert_eq!(r.seeds, vec![0, 1, 2]);
    }
}
