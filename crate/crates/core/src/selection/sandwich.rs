//! Best of the greedy solutions on the score, its lower bound and its upper bound.

use serde::Serialize;

use super::bounds::{lb_objective, ub_copeland_objective, ub_positional_objective, BoundSets};
use super::{exact_objective, greedy, Objective};
use crate::campaign::{CampaignState, SeedSet};
use crate::diffusion::snapshot;
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::scores::{ScoreKind, ScoreSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Score,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichResult {
    pub seeds: Vec<usize>,
    /// Exact score of `seeds`.
    pub value: f64,
    pub branch: Branch,
    pub score_seeds: Vec<usize>,
    pub score_value: f64,
    pub lower_seeds: Option<Vec<usize>>,
    pub lower_value: Option<f64>,
    pub upper_seeds: Vec<usize>,
    pub upper_value: f64,
    /// Upper bound evaluated at the upper-bound solution.
    pub upper_bound_at_upper: f64,
    /// `F(S_U) / UB(S_U)`, absent when `UB(S_U) = 0`.
    pub ratio: Option<f64>,
    /// False when some node holds exactly equal opinions for two candidates in one of
    /// the evaluated snapshots, which voids the Copeland bound.
    pub bound_valid: bool,
}

/// Runs the three branches with exact evaluation.
pub fn sandwich_select(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
) -> Result<SandwichResult> {
    sandwich_with(
        graph,
        campaigns,
        spec,
        k,
        horizon,
        || {
            let mut f = exact_objective(graph, campaigns, spec, horizon)?;
            Ok(greedy(&mut f, k)?.seeds)
        },
        |sets| {
            let mut lb = lb_objective(graph, campaigns, spec, sets, horizon)?;
            Ok(greedy(&mut lb, k)?.seeds)
        },
    )
}

/// Sandwich selection with caller-supplied greedy runs for the score branch and the
/// lower-bound branch (so either may use an estimator). The upper bound is always
/// combinatorial, and the final comparison uses exact scores.
pub fn sandwich_with(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    k: usize,
    horizon: usize,
    score_branch: impl FnOnce() -> Result<Vec<usize>>,
    lower_branch: impl FnOnce(&BoundSets) -> Result<Vec<usize>>,
) -> Result<SandwichResult> {
    let copeland = spec.kind == ScoreKind::Copeland;
    if !copeland && !spec.kind.is_plurality_variant() {
        return Err(Error::InvalidScore(format!(
            "sandwich selection applies to rank-based scores, not {}",
            spec.kind
        )));
    }
    let sets = BoundSets::compute(graph, campaigns, spec, horizon)?;
    let f = exact_objective(graph, campaigns, spec, horizon)?;

    let score_seeds = score_branch()?;
    let score_value = f.value(&score_seeds);

    let (lower_seeds, upper_seeds, upper_bound_at_upper) = if copeland {
        let mut ub = ub_copeland_objective(graph, &sets, horizon);
        let su = greedy(&mut ub, k)?.seeds;
        let bound = ub.value(&su);
        (None, su, bound)
    } else {
        let sl = lower_branch(&sets)?;
        let mut ub = ub_positional_objective(graph, spec, &sets, horizon)?;
        let su = greedy(&mut ub, k)?.seeds;
        let bound = ub.value(&su);
        (Some(sl), su, bound)
    };
    let upper_value = f.value(&upper_seeds);
    let lower_value = lower_seeds.as_ref().map(|s| f.value(s));

    let mut best = (Branch::Score, score_seeds.clone(), score_value);
    if let (Some(s), Some(v)) = (&lower_seeds, lower_value) {
        if v > best.2 {
            best = (Branch::Lower, s.clone(), v);
        }
    }
    if upper_value > best.2 {
        best = (Branch::Upper, upper_seeds.clone(), upper_value);
    }

    let ratio = (upper_bound_at_upper > 0.0).then(|| upper_value / upper_bound_at_upper);
    let bound_valid = if copeland {
        let mut valid = true;
        for s in [&[][..], &score_seeds, &upper_seeds] {
            let seeds = SeedSet::new(spec.target, s.to_vec())?;
            if snapshot(graph, campaigns, &seeds, horizon)?.has_exact_ties() {
                valid = false;
            }
        }
        valid
    } else {
        true
    };

    Ok(SandwichResult {
        seeds: best.1,
        value: best.2,
        branch: best.0,
        score_seeds,
        score_value,
        lower_seeds,
        lower_value,
        upper_seeds,
        upper_value,
        upper_bound_at_upper,
        ratio,
        bound_valid,
    })
}
