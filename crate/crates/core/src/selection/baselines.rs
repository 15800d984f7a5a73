//! Static seed rankings that ignore opinions.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const RWR_RESTART: f64 = 0.15;
pub const POWER_TOLERANCE: f64 = 1e-8;
const MAX_POWER_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Degree,
    PageRank,
    Rwr,
    Random,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "degree" | "dc" => Baseline::Degree,
            "pagerank" | "pr" => Baseline::PageRank,
            "rwr" => Baseline::Rwr,
            "random" => Baseline::Random,
            other => return Err(Error::InvalidArgument(format!("unknown baseline {other:?}"))),
        })
    }
}

/// Weighted out-degree `sum_j w(v, j)` on candidate `q`'s graph.
pub fn weighted_out_degree(graph: &InfluenceGraph, q: usize) -> Vec<f64> {
    let w = graph.candidate(q);
    (0..graph.node_count())
        .map(|v| w.outgoing(v).map(|(_, x)| x).sum())
        .collect()
}

/// PageRank along influence edges. Transition `u -> v` has probability
/// `w(u, v) / sum_j w(u, j)`; nodes without out-weight spread uniformly.
pub fn pagerank(graph: &InfluenceGraph, q: usize) -> Vec<f64> {
    let n = graph.node_count();
    let w = graph.candidate(q);
    let out = weighted_out_degree(graph, q);
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_POWER_ITERS {
        let dangling: f64 = (0..n).filter(|&u| out[u] <= 0.0).map(|u| x[u]).sum();
        let teleport = (1.0 - PAGERANK_DAMPING) / n as f64 + PAGERANK_DAMPING * dangling / n as f64;
        for v in 0..n {
            let inflow: f64 = w
                .incoming(v)
                .filter(|&(u, _)| out[u] > 0.0)
                .map(|(u, wt)| x[u] * wt / out[u])
                .sum();
            next[v] = teleport + PAGERANK_DAMPING * inflow;
        }
        let residual: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < POWER_TOLERANCE {
            break;
        }
    }
    x
}

/// Stationary visit distribution of the reverse walk (step from `v` to in-neighbor
/// `j` with probability `w(j, v)`, stay put without in-edges) restarting uniformly
/// with probability 0.15.
pub fn random_walk_with_restart(graph: &InfluenceGraph, q: usize) -> Vec<f64> {
    let n = graph.node_count();
    let w = graph.candidate(q);
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_POWER_ITERS {
        next.fill(RWR_RESTART / n as f64);
        for v in 0..n {
            let mass = (1.0 - RWR_RESTART) * x[v];
            if w.in_degree(v) == 0 {
                next[v] += mass;
            } else {
                for (j, wt) in w.incoming(v) {
                    next[j] += mass * wt;
                }
            }
        }
        let residual: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < POWER_TOLERANCE {
            break;
        }
    }
    x
}

/// The `k` highest-scoring nodes, ties broken by smaller id.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn baseline_select(
    graph: &InfluenceGraph,
    q: usize,
    method: Baseline,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    let n = graph.node_count();
    if k > n {
        return Err(Error::InvalidArgument(format!("budget k = {k} exceeds n = {n}")));
    }
    if q >= graph.candidate_count() {
        return Err(Error::CandidateOutOfRange {
            candidate: q,
            r: graph.candidate_count(),
        });
    }
    Ok(match method {
        Baseline::Degree => top_k(&weighted_out_degree(graph, q), k),
        Baseline::PageRank => top_k(&pagerank(graph, q), k),
        Baseline::Rwr => top_k(&random_walk_with_restart(graph, q), k),
        Baseline::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
            order.truncate(k);
            order
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_center_has_top_degree() {
        let g = InfluenceGraph::shared(5, 1, &[(2, 0, 1.0), (2, 1, 1.0), (2, 3, 1.0), (2, 4, 1.0)]).unwrap();
        assert_eq!(baseline_select(&g, 0, Baseline::Degree, 1, 0).unwrap(), vec![2]);
        assert_eq!(baseline_select(&g, 0, Baseline::Rwr, 1, 0).unwrap(), vec![2]);
    }

    #[test]
    fn cycle_pagerank_is_uniform() {
        let g = InfluenceGraph::shared(4, 1, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let pr = pagerank(&g, 0);
        assert!(pr.iter().all(|&x| (x - 0.25).abs() < 1e-12));
        assert_eq!(baseline_select(&g, 0, Baseline::PageRank, 4, 0).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn distributions_sum_to_one() {
        let (g, _) = crate::fixtures::random_instance(5, 15, 1);
        for x in [pagerank(&g, 0), random_walk_with_restart(&g, 0)] {
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_is_reproducible() {
        let (g, _) = crate::fixtures::random_instance(5, 30, 1);
        let a = baseline_select(&g, 0, Baseline::Random, 5, 42).unwrap();
        assert_eq!(a, baseline_select(&g, 0, Baseline::Random, 5, 42).unwrap());
        assert_ne!(a, baseline_select(&g, 0, Baseline::Random, 5, 43).unwrap());
    }
}
