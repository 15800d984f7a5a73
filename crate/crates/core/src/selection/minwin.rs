//! Binary search for the smallest greedy seed budget that makes the target win.

use serde::Serialize;

use super::{greedy, Objective};
use crate::campaign::{CampaignState, SeedSet};
use crate::diffusion::snapshot;
use crate::error::Result;
use crate::graph::InfluenceGraph;
use crate::scores::{winner_check, ScoreSpec};
use crate::selection::exact_objective;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinWinResult {
    /// Smallest winning budget found, `None` when even seeding every node loses.
    pub k: Option<usize>,
    pub seeds: Vec<usize>,
    /// Every `(k, won)` probe in evaluation order.
    pub probes: Vec<(usize, bool)>,
}

impl MinWinResult {
    pub fn winnable(&self) -> bool {
        self.k.is_some()
    }
}

pub fn wins(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    seeds: &[usize],
    horizon: usize,
) -> Result<bool> {
    let s = SeedSet::new(spec.target, seeds.to_vec())?;
    winner_check(&snapshot(graph, campaigns, &s, horizon)?, spec)
}

/// `select(k)` must return a seed set of size `k`. The budgets `0` and `n` are probed
/// first (`n` as the full node set); the search then halves `[0, n]` while the
/// target loses at the lower end and wins at the upper end.
pub fn min_win_with(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
    mut select: impl FnMut(usize) -> Result<Vec<usize>>,
) -> Result<MinWinResult> {
    let n = graph.node_count();
    let mut probes = Vec::new();

    let win0 = wins(graph, campaigns, spec, &[], horizon)?;
    probes.push((0, win0));
    if win0 {
        return Ok(MinWinResult {
            k: Some(0),
            seeds: Vec::new(),
            probes,
        });
    }
    let everyone: Vec<usize> = (0..n).collect();
    let win_n = wins(graph, campaigns, spec, &everyone, horizon)?;
    probes.push((n, win_n));
    if !win_n {
        return Ok(MinWinResult {
            k: None,
            seeds: Vec::new(),
            probes,
        });
    }

    let (mut lo, mut hi) = (0usize, n);
    let mut best = everyone;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let s = select(mid)?;
        let won = wins(graph, campaigns, spec, &s, horizon)?;
        probes.push((mid, won));
        if won {
            hi = mid;
            best = s;
        } else {
            lo = mid;
        }
    }
    Ok(MinWinResult {
        k: Some(hi),
        seeds: best,
        probes,
    })
}

/// Exact-evaluation greedy inside the search. Greedy runs are prefix-consistent, so a
/// run at a larger budget answers every smaller probe.
pub fn min_win_select(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &ScoreSpec,
    horizon: usize,
) -> Result<MinWinResult> {
    let mut cached: Vec<usize> = Vec::new();
    let mut cached_k = 0usize;
    min_win_with(graph, campaigns, spec, horizon, |k| {
        if k > cached_k {
            let mut obj = exact_objective(graph, campaigns, spec, horizon)?;
            debug_assert_eq!(obj.node_count(), graph.node_count());
            cached = greedy(&mut obj, k)?.seeds;
            cached_k = k;
        }
        Ok(cached[..k].to_vec())
    })
}
