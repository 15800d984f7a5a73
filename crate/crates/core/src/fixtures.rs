//! Small in-memory instances shared by tests, benchmarks and the Python bindings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::campaign::CampaignState;
use crate::graph::{InfluenceGraph, Normalization, RawEdge};

/// Four users, two candidates; users 1..4 are nodes 0..3.
/// Users 1 and 2 each influence user 3 with weight 0.5, user 3 fully influences user 4.
pub fn running_example() -> (InfluenceGraph, Vec<CampaignState>) {
    let edges = [(0, 2, 0.5), (1, 2, 0.5), (2, 3, 1.0)];
    let g = InfluenceGraph::shared(4, 2, &edges).expect("valid fixture");
    let c1 = CampaignState::new(0, vec![0.4, 0.8, 0.6, 0.9], vec![0.5; 4]).unwrap();
    let c2 = CampaignState::new(1, vec![0.35, 0.75, 1.0, 0.8], vec![0.5; 4]).unwrap();
    (g, vec![c1, c2])
}

/// Random dense-ish digraph on `n` nodes with `r` candidates. Each ordered pair
/// (self-loops included) is an edge with probability 0.35, with an independent
/// weight per candidate. Opinions and stubbornness are uniform in `[0, 1]`.
pub fn random_instance(seed: u64, n: usize, r: usize) -> (InfluenceGraph, Vec<CampaignState>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.35) {
                pairs.push((i, j));
            }
        }
    }
    let per_candidate: Vec<Vec<RawEdge>> = (0..r)
        .map(|_| {
            pairs
                .iter()
                .map(|&(i, j)| RawEdge::new(i, j, rng.random_range(0.05..=1.0)))
                .collect()
        })
        .collect();
    let g = InfluenceGraph::from_raw_edges(n, &per_candidate, Normalization::Normalize, &[])
        .expect("valid random instance");
    let campaigns = (0..r)
        .map(|q| {
            let init = (0..n).map(|_| rng.random::<f64>()).collect();
            let stub = (0..n).map(|_| rng.random::<f64>()).collect();
            CampaignState::new(q, init, stub).unwrap()
        })
        .collect();
    (g, campaigns)
}
