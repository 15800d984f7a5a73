//! Submodular lower and upper bounds for the rank-based scores.
//!
//! `V_q`: nodes that rank the target within the top `p` without seeds.
//! `U_q`: nodes that prefer the target to at least one other candidate without seeds.
//! `N_S`: nodes within `t` outgoing hops of some seed (seeds included).

use rayon::prelude::*;

use super::{exact_scorer, ExactObjective, Objective};
use crate::campaign::{CampaignState, SeedSet};
use crate::diffusion::Propagator;
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::scores::{ScoreKind, ScoreSpec};

#[derive(Debug, Clone)]
pub struct BoundSets {
    pub candidate: usize,
    pub horizon: usize,
    pub favorable: Vec<bool>,
    pub weakly_favorable: Vec<bool>,
}

impl BoundSets {
    /// Both sets from the no-seed opinions at `horizon`.
    pub fn compute(
        graph: &InfluenceGraph,
        campaigns: &[CampaignState],
        spec: &ScoreSpec,
        horizon: usize,
    ) -> Result<Self> {
        let scorer = exact_scorer(graph, campaigns, spec, horizon)?;
        let b = Propagator::new()
            .run(graph, &campaigns[spec.target], &[], horizon)
            .to_vec();
        let eps = spec.tie_eps;
        let favorable = (0..b.len()).map(|v| scorer.rank(v, b[v]) <= spec.p).collect();
        let weakly_favorable = (0..b.len())
            .map(|v| {
                scorer
                    .other_rows()
                    .iter()
                    .map(|row| row[v])
                    .min_by(f64::total_cmp)
                    .is_some_and(|lo| b[v] > lo + eps)
            })
            .collect();
        Ok(BoundSets {
            candidate: spec.target,
            horizon,
            favorable,
            weakly_favorable,
        })
    }

    pub fn favorable_nodes(&self) -> Vec<usize> {
        members(&self.favorable)
    }

    pub fn weakly_favorable_nodes(&self) -> Vec<usize> {
        members(&self.weakly_favorable)
    }
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v).collect()
}

/// Breadth-first search over candidate `q`'s outgoing edges, at most `t` hops.
#[derive(Debug, Clone)]
struct HopBfs {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl HopBfs {
    fn new(n: usize) -> Self {
        HopBfs {
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Calls `visit` once for every node within `t` hops of any source.
    fn run(&mut self, graph: &InfluenceGraph, q: usize, sources: &[usize], t: usize, mut visit: impl FnMut(usize)) {
        self.epoch += 1;
        if self.epoch == u32::MAX {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let w = graph.candidate(q);
        self.frontier.clear();
        for &s in sources {
            if self.stamp[s] != self.epoch {
                self.stamp[s] = self.epoch;
                self.frontier.push(s);
                visit(s);
            }
        }
        for _ in 0..t {
            if self.frontier.is_empty() {
                break;
            }
            self.next.clear();
            for &u in &self.frontier {
                for (v, _) in w.outgoing(u) {
                    if self.stamp[v] != self.epoch {
                        self.stamp[v] = self.epoch;
                        self.next.push(v);
                        visit(v);
                    }
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

/// `N_S` as a membership mask.
pub fn reachable(graph: &InfluenceGraph, q: usize, seeds: &[usize], t: usize) -> Vec<bool> {
    let mut mask = vec![false; graph.node_count()];
    HopBfs::new(graph.node_count()).run(graph, q, seeds, t, |v| mask[v] = true);
    mask
}

/// `factor * |N_S ∪ base|`, with the union maintained incrementally across greedy rounds.
#[derive(Debug, Clone)]
pub struct CoverageObjective<'a> {
    graph: &'a InfluenceGraph,
    candidate: usize,
    horizon: usize,
    base: Vec<bool>,
    factor: f64,
    covered: Vec<bool>,
}

impl<'a> CoverageObjective<'a> {
    pub fn new(graph: &'a InfluenceGraph, candidate: usize, horizon: usize, base: Vec<bool>, factor: f64) -> Self {
        CoverageObjective {
            graph,
            candidate,
            horizon,
            covered: base.clone(),
            base,
            factor,
        }
    }
}

impl Objective for CoverageObjective<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn value(&self, seeds: &[usize]) -> f64 {
        let mut mask = self.base.clone();
        HopBfs::new(mask.len()).run(self.graph, self.candidate, seeds, self.horizon, |v| mask[v] = true);
        self.factor * mask.iter().filter(|&&m| m).count() as f64
    }

    fn gains(&self, _seeds: &[usize], candidates: &[usize]) -> Vec<f64> {
        let n = self.graph.node_count();
        candidates
            .par_iter()
            .map_init(
                || HopBfs::new(n),
                |bfs, &s| {
                    let mut fresh = 0usize;
                    bfs.run(self.graph, self.candidate, &[s], self.horizon, |v| {
                        if !self.covered[v] {
                            fresh += 1;
                        }
                    });
                    self.factor * fresh as f64
                },
            )
            .collect()
    }

    fn commit(&mut self, v: usize) {
        let covered = &mut self.covered;
        HopBfs::new(covered.len()).run(self.graph, self.candidate, &[v], self.horizon, |u| covered[u] = true);
    }
}

fn require_plurality_variant(spec: &ScoreSpec) -> Result<()> {
    if !spec.kind.is_plurality_variant() {
        return Err(Error::InvalidScore(format!(
            "positional bounds need a plurality-type score, got {}",
            spec.kind
        )));
    }
    Ok(())
}

/// `omega[p] * sum over V_q of the target's opinions under the seeds`.
pub fn lb_objective<'a>(
    graph: &'a InfluenceGraph,
    campaigns: &'a [CampaignState],
    spec: &ScoreSpec,
    sets: &BoundSets,
    horizon: usize,
) -> Result<ExactObjective<'a, impl Fn(&[f64]) -> f64 + Sync>> {
    require_plurality_variant(spec)?;
    let weight = spec.last_weight();
    let fav = sets.favorable_nodes();
    Ok(ExactObjective::new(graph, &campaigns[spec.target], horizon, move |b: &[f64]| {
        weight * fav.iter().map(|&v| b[v]).sum::<f64>()
    }))
}

/// `omega[1] * |N_S ∪ V_q|`.
pub fn ub_positional_objective<'a>(
    graph: &'a InfluenceGraph,
    spec: &ScoreSpec,
    sets: &BoundSets,
    horizon: usize,
) -> Result<CoverageObjective<'a>> {
    require_plurality_variant(spec)?;
    Ok(CoverageObjective::new(graph, spec.target, horizon, sets.favorable.clone(), spec.top_weight()))
}

/// `(r - 1) / (floor(n / 2) + 1) * |N_S ∪ U_q|`.
pub fn ub_copeland_objective<'a>(
    graph: &'a InfluenceGraph,
    sets: &BoundSets,
    horizon: usize,
) -> CoverageObjective<'a> {
    let (n, r) = (graph.node_count(), graph.candidate_count());
    let factor = (r - 1) as f64 / (n / 2 + 1) as f64;
    CoverageObjective::new(graph, sets.candidate, horizon, sets.weakly_favorable.clone(), factor)
}

pub fn lb_positional(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    seeds: &SeedSet,
    horizon: usize,
) -> Result<f64> {
    seeds.check_range(graph.node_count())?;
    let sets = BoundSets::compute(graph, campaigns, spec, horizon)?;
    Ok(lb_objective(graph, campaigns, spec, &sets, horizon)?.value(seeds.nodes()))
}

pub fn ub_positional(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    seeds: &SeedSet,
    horizon: usize,
) -> Result<f64> {
    seeds.check_range(graph.node_count())?;
    let sets = BoundSets::compute(graph, campaigns, spec, horizon)?;
    Ok(ub_positional_objective(graph, spec, &sets, horizon)?.value(seeds.nodes()))
}

pub fn ub_copeland(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    target: usize,
    seeds: &SeedSet,
    horizon: usize,
) -> Result<f64> {
    seeds.check_range(graph.node_count())?;
    let spec = ScoreSpec::of_kind(ScoreKind::Copeland, target, graph.candidate_count());
    let sets = BoundSets::compute(graph, campaigns, &spec, horizon)?;
    Ok(ub_copeland_objective(graph, &sets, horizon).value(seeds.nodes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, running_example};
    use crate::selection::brute::all_subsets;
    use crate::selection::exact_objective;

    fn s(v: &[usize]) -> SeedSet {
        SeedSet::new(0, v.to_vec()).unwrap()
    }

    #[test]
    fn example_sets_and_bounds() {
        let (g, cs) = running_example();
        let spec = ScoreSpec::plurality(0);
        let sets = BoundSets::compute(&g, &cs, &spec, 1).unwrap();
        assert_eq!(sets.favorable_nodes(), vec![0, 1]);
        assert_eq!(sets.weakly_favorable_nodes(), vec![0, 1]);
        assert!((lb_positional(&g, &cs, &spec, &s(&[2]), 1).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(ub_positional(&g, &cs, &spec, &s(&[2]), 1).unwrap(), 4.0);
        assert_eq!(ub_positional(&g, &cs, &spec, &s(&[]), 1).unwrap(), 2.0);
        assert!((ub_copeland(&g, &cs, 0, &s(&[2]), 1).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(reachable(&g, 0, &[2], 1), vec![false, false, true, true]);
        assert_eq!(reachable(&g, 0, &[0], 0), vec![true, false, false, false]);
        assert!(reachable(&g, 0, &[], 3).iter().all(|&m| !m));
    }

    #[test]
    fn zero_weight_gives_zero_lower_bound() {
        let (g, cs) = running_example();
        let spec = ScoreSpec::positional(0, 2, vec![1.0, 0.0]);
        assert_eq!(lb_positional(&g, &cs, &spec, &s(&[1]), 1).unwrap(), 0.0);
    }

    #[test]
    fn incremental_gains_match_values() {
        let (g, cs) = random_instance(3, 9, 2);
        let spec = ScoreSpec::plurality(0);
        let sets = BoundSets::compute(&g, &cs, &spec, 2).unwrap();
        let mut ub = ub_positional_objective(&g, &spec, &sets, 2).unwrap();
        let mut seeds = Vec::new();
        for chosen in [4usize, 1] {
            let cands: Vec<usize> = (0..9).filter(|v| !seeds.contains(v)).collect();
            let gains = ub.gains(&seeds, &cands);
            for (i, &v) in cands.iter().enumerate() {
                let mut with = seeds.clone();
                with.push(v);
                assert_eq!(gains[i], ub.value(&with) - ub.value(&seeds));
            }
            seeds.push(chosen);
            ub.commit(chosen);
        }
    }

    #[test]
    fn sandwich_ordering_exhaustive() {
        for seed in 0..10 {
            let (g, cs) = random_instance(100 + seed, 6, 3);
            for spec in [ScoreSpec::plurality(0), ScoreSpec::p_approval(0, 2)] {
                let sets = BoundSets::compute(&g, &cs, &spec, 2).unwrap();
                let f = exact_objective(&g, &cs, &spec, 2).unwrap();
                let lb = lb_objective(&g, &cs, &spec, &sets, 2).unwrap();
                let ub = ub_positional_objective(&g, &spec, &sets, 2).unwrap();
                for (_, sub) in all_subsets(6) {
                    let (l, x, u) = (lb.value(&sub), f.value(&sub), ub.value(&sub));
                    assert!(l <= x + 1e-12 && x <= u + 1e-12, "{l} {x} {u}");
                }
            }
        }
    }
}
