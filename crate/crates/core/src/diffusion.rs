//! Exact finite-horizon Friedkin-Johnsen propagation.
//!
//! `b(t+1)_i = (1 - d_i) * sum_j w(j, i) * b(t)_j + d_i * b(0)_i`

use rayon::prelude::*;

use crate::campaign::{CampaignState, SeedSet};
use crate::error::{Error, Result};
use crate::graph::{CandidateWeights, InfluenceGraph};
use crate::scores::OpinionSnapshot;

/// Below this many nodes a step runs sequentially.
const PAR_THRESHOLD: usize = 1 << 14;

#[inline]
fn update_node(w: &CandidateWeights, init: &[f64], stub: &[f64], prev: &[f64], i: usize) -> f64 {
    let d = stub[i];
    if d == 1.0 {
        return init[i];
    }
    let (src, wt) = w.incoming_slices(i);
    let avg = if src.is_empty() {
        prev[i]
    } else {
        let mut acc = 0.0;
        for (&j, &x) in src.iter().zip(wt) {
            acc += x * prev[j as usize];
        }
        acc
    };
    ((1.0 - d) * avg + d * init[i]).clamp(0.0, 1.0)
}

/// One FJ step from `prev` into `next`. Each entry depends only on `prev`, so the
/// result is identical for any worker count.
pub fn step_into(w: &CandidateWeights, init: &[f64], stub: &[f64], prev: &[f64], next: &mut [f64]) {
    if next.len() >= PAR_THRESHOLD {
        next.par_iter_mut()
            .enumerate()
            .for_each(|(i, out)| *out = update_node(w, init, stub, prev, i));
    } else {
        for (i, out) in next.iter_mut().enumerate() {
            *out = update_node(w, init, stub, prev, i);
        }
    }
}

/// Reusable buffers for repeated propagation of the same candidate.
#[derive(Debug, Clone, Default)]
pub struct Propagator {
    init: Vec<f64>,
    stub: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Propagator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opinions at `horizon` of a t=0 state with `seeds` applied. Seed ids must be
    /// in range; the caller is responsible for validation.
    pub fn run(
        &mut self,
        graph: &InfluenceGraph,
        state: &CampaignState,
        seeds: &[usize],
        horizon: usize,
    ) -> &[f64] {
        self.init.clear();
        self.init.extend_from_slice(&state.initial);
        self.stub.clear();
        self.stub.extend_from_slice(&state.stubbornness);
        for &s in seeds {
            self.init[s] = 1.0;
            self.stub[s] = 1.0;
        }
        let w = graph.candidate(state.candidate);
        self.a.clear();
        self.a.extend_from_slice(&self.init);
        self.b.resize(self.a.len(), 0.0);
        for _ in 0..horizon {
            step_into(w, &self.init, &self.stub, &self.a, &mut self.b);
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a
    }
}

/// Advances `state` by one timestamp.
pub fn step_fj(graph: &InfluenceGraph, state: &CampaignState) -> CampaignState {
    let mut next = vec![0.0; state.node_count()];
    step_into(
        graph.candidate(state.candidate),
        &state.initial,
        &state.stubbornness,
        &state.current,
        &mut next,
    );
    CampaignState {
        current: next,
        t: state.t + 1,
        ..state.clone()
    }
}

/// Applies `step_fj` until the state reaches timestamp `horizon`.
pub fn propagate(graph: &InfluenceGraph, state: &CampaignState, horizon: usize) -> Result<CampaignState> {
    if horizon < state.t {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} precedes the state's timestamp {}",
            state.t
        )));
    }
    let w = graph.candidate(state.candidate);
    let mut cur = state.current.clone();
    let mut next = vec![0.0; cur.len()];
    for _ in state.t..horizon {
        step_into(w, &state.initial, &state.stubbornness, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(CampaignState {
        current: cur,
        t: horizon,
        ..state.clone()
    })
}

/// Opinion vectors for timestamps `state.t ..= horizon`.
pub fn trajectory(graph: &InfluenceGraph, state: &CampaignState, horizon: usize) -> Result<Vec<Vec<f64>>> {
    if horizon < state.t {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} precedes the state's timestamp {}",
            state.t
        )));
    }
    let w = graph.candidate(state.candidate);
    let mut out = vec![state.current.clone()];
    for _ in state.t..horizon {
        let mut next = vec![0.0; state.node_count()];
        step_into(w, &state.initial, &state.stubbornness, out.last().unwrap(), &mut next);
        out.push(next);
    }
    Ok(out)
}

/// For each `t` in `1..=max_t` (outer index `t - 1`) and each `delta` (inner index),
/// the fraction of nodes with `|b(t) - b(t-1)| > delta/100 * b(t-1)`.
///
/// For finite `delta`, a node with `b(t-1) = 0` counts as changed iff `b(t) > 0`.
/// An infinite `delta` never counts a node as changed.
pub fn convergence_profile(
    graph: &InfluenceGraph,
    state: &CampaignState,
    max_t: usize,
    delta_pcts: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if max_t == 0 {
        return Err(Error::InvalidArgument("max_t must be at least 1".into()));
    }
    if let Some(d) = delta_pcts.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::InvalidArgument(format!("delta {d} must be positive")));
    }
    let traj = trajectory(graph, state, state.t + max_t)?;
    let n = state.node_count() as f64;
    let mut out = Vec::with_capacity(max_t);
    for win in traj.windows(2) {
        let (prev, cur) = (&win[0], &win[1]);
        let row = delta_pcts
            .iter()
            .map(|&delta| {
                if delta.is_infinite() {
                    return 0.0;
                }
                let changed = prev
                    .iter()
                    .zip(cur)
                    .filter(|(&p, &c)| {
                        if p == 0.0 {
                            c > 0.0
                        } else {
                            (c - p).abs() > delta / 100.0 * p
                        }
                    })
                    .count();
                changed as f64 / n
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Opinions of every candidate at `horizon`, with `seeds` applied to the seed set's
/// candidate only.
pub fn snapshot(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    seeds: &SeedSet,
    horizon: usize,
) -> Result<OpinionSnapshot> {
    seeds.check_range(graph.node_count())?;
    let mut prop = Propagator::new();
    let rows = campaigns
        .iter()
        .map(|c| {
            let s: &[usize] = if c.candidate == seeds.candidate { seeds.nodes() } else { &[] };
            prop.run(graph, c, s, horizon).to_vec()
        })
        .collect();
    Ok(OpinionSnapshot::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, running_example};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn running_example_one_step() {
        let (g, cs) = running_example();
        let s = step_fj(&g, &cs[0]);
        assert_eq!(s.t, 1);
        assert!(close(&s.current, &[0.4, 0.8, 0.6, 0.75]));
        let s2 = step_fj(&g, &cs[1]);
        assert!(close(&s2.current, &[0.35, 0.75, 0.775, 0.9]));
    }

    #[test]
    fn seeded_propagation_matches_table() {
        let (g, cs) = running_example();
        let s12 = cs[0].apply_seeds(&SeedSet::new(0, vec![0, 1]).unwrap()).unwrap();
        assert!(close(&propagate(&g, &s12, 1).unwrap().current, &[1.0, 1.0, 0.8, 0.75]));
        let s3 = cs[0].apply_seeds(&SeedSet::new(0, vec![2]).unwrap()).unwrap();
        assert!(close(&propagate(&g, &s3, 1).unwrap().current, &[0.4, 0.8, 1.0, 0.95]));
        let mut p = Propagator::new();
        assert!(close(p.run(&g, &cs[0], &[2], 1), &[0.4, 0.8, 1.0, 0.95]));
    }

    #[test]
    fn horizon_equal_to_timestamp_is_identity() {
        let (g, cs) = running_example();
        let s = step_fj(&g, &cs[0]);
        assert_eq!(propagate(&g, &s, 1).unwrap(), s);
        assert!(propagate(&g, &s, 0).is_err());
    }

    #[test]
    fn fully_stubborn_is_fixed() {
        let (g, cs) = running_example();
        let st = CampaignState::new(0, cs[0].initial.clone(), vec![1.0; 4]).unwrap();
        assert_eq!(propagate(&g, &st, 7).unwrap().current, st.initial);
        let prof = convergence_profile(&g, &st, 3, &[1.0, 5.0]).unwrap();
        assert!(prof.iter().flatten().all(|&f| f == 0.0));
    }

    #[test]
    fn zero_stubbornness_is_degroot() {
        let (g, cs) = running_example();
        let st = CampaignState::new(0, cs[0].initial.clone(), vec![0.0; 4]).unwrap();
        let s = step_fj(&g, &st);
        let b = &st.initial;
        let expect = [b[0], b[1], 0.5 * b[0] + 0.5 * b[1], b[2]];
        assert!(close(&s.current, &expect));
    }

    #[test]
    fn convergence_profile_running_example() {
        let (g, cs) = running_example();
        // c1 at t=1: only user 4 moves (0.9 -> 0.75); user 3 stays at 0.6.
        let p = convergence_profile(&g, &cs[0], 1, &[1.0, f64::INFINITY]).unwrap();
        assert_eq!(p, vec![vec![0.25, 0.0]]);
        // c2 at t=1: users 3 and 4 move.
        let p = convergence_profile(&g, &cs[1], 1, &[1.0]).unwrap();
        assert_eq!(p, vec![vec![0.5]]);
    }

    #[test]
    fn convergence_zero_denominator() {
        let g = InfluenceGraph::shared(2, 1, &[(0, 1, 1.0)]).unwrap();
        let st = CampaignState::new(0, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let p = convergence_profile(&g, &st, 2, &[50.0]).unwrap();
        assert_eq!(p[0], vec![0.5]);
        assert_eq!(p[1], vec![0.0]);
    }

    #[test]
    fn locality_outside_t_hops() {
        // path 0 -> 1 -> 2 -> 3; seed 0 cannot affect node 3 within 2 steps
        let g = InfluenceGraph::shared(4, 1, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let st = CampaignState::new(0, vec![0.1, 0.2, 0.3, 0.4], vec![0.3; 4]).unwrap();
        let mut p = Propagator::new();
        let base = p.run(&g, &st, &[], 2).to_vec();
        let seeded = p.run(&g, &st, &[0], 2).to_vec();
        assert_eq!(base[3], seeded[3]);
        assert!(seeded[2] > base[2]);
    }

    proptest! {
        #[test]
        fn range_and_seed_monotonicity(seed in any::<u64>(), t in 0usize..6) {
            let (g, cs) = random_instance(seed, 7, 1);
            let mut p = Propagator::new();
            let small = p.run(&g, &cs[0], &[1], t).to_vec();
            let big = p.run(&g, &cs[0], &[1, 4], t).to_vec();
            for v in 0..7 {
                prop_assert!((0.0..=1.0).contains(&small[v]));
                prop_assert!(small[v] <= big[v] + 1e-15);
            }
        }

        #[test]
        fn propagate_equals_repeated_steps(seed in any::<u64>(), t in 0usize..5) {
            let (g, cs) = random_instance(seed, 6, 1);
            let mut s = cs[0].clone();
            for _ in 0..t {
                s = step_fj(&g, &s);
            }
            let direct = propagate(&g, &cs[0], t).unwrap();
            prop_assert_eq!(s.current, direct.current);
        }
    }
}
