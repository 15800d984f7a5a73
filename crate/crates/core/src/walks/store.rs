//! Flat storage of reverse random walks, generated without seeds and truncated
//! afterwards at the first seed occurrence.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::campaign::CampaignState;
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::rng;

/// Appends one reverse walk from `start` to `out`: at node `v`, stop with probability
/// `d_v`, otherwise move to an in-neighbor `j` with probability `w(j, v)`; at most
/// `t` moves. A node without in-edges keeps the walk in place, so the walk ends there.
pub fn walk_into(
    graph: &InfluenceGraph,
    state: &CampaignState,
    start: usize,
    t: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<u32>,
) {
    let w = graph.candidate(state.candidate);
    let mut cur = start;
    out.push(cur as u32);
    for _ in 0..t {
        let d = state.stubbornness[cur];
        if d >= 1.0 || w.in_degree(cur) == 0 {
            break;
        }
        if d > 0.0 && rng.random::<f64>() < d {
            break;
        }
        cur = w.sample_in_neighbor(cur, rng.random::<f64>());
        out.push(cur as u32);
    }
}

/// Walks grouped into estimation units. A group is the set of walks averaged into
/// one opinion estimate: all walks of one start node for per-node estimation, a
/// single walk for sketches. Walk ids of a group are contiguous.
#[derive(Debug, Clone)]
pub struct WalkStore {
    n: usize,
    horizon: usize,
    offsets: Vec<usize>,
    nodes: Vec<u32>,
    group_offsets: Vec<usize>,
    group_node: Vec<u32>,
    walk_group: Vec<u32>,
    inv_offsets: Vec<usize>,
    inv_walk: Vec<u32>,
    inv_pos: Vec<u32>,
    /// Position of the effective end in each walk.
    eff_end: Vec<u32>,
    /// Whether the walk has been truncated at a seed.
    cut: Vec<bool>,
}

impl WalkStore {
    /// Builds a store from concatenated walks. `group_sizes[g]` consecutive walks form
    /// group `g`, estimating node `group_node[g]`.
    fn build(
        n: usize,
        horizon: usize,
        walk_lengths: Vec<u32>,
        nodes: Vec<u32>,
        group_sizes: &[usize],
        group_node: Vec<u32>,
    ) -> Self {
        let walks = walk_lengths.len();
        let mut offsets = Vec::with_capacity(walks + 1);
        offsets.push(0);
        for &l in &walk_lengths {
            offsets.push(offsets.last().unwrap() + l as usize);
        }
        let mut group_offsets = Vec::with_capacity(group_sizes.len() + 1);
        group_offsets.push(0);
        let mut walk_group = Vec::with_capacity(walks);
        for (g, &s) in group_sizes.iter().enumerate() {
            group_offsets.push(group_offsets.last().unwrap() + s);
            walk_group.extend(std::iter::repeat_n(g as u32, s));
        }
        debug_assert_eq!(walk_group.len(), walks);

        // first occurrences only: truncation always happens at the first one
        let mut seen = vec![u32::MAX; n];
        let mut first: Vec<(u32, u32)> = Vec::with_capacity(nodes.len());
        let mut count = vec![0usize; n + 1];
        for w in 0..walks {
            for (p, &v) in nodes[offsets[w]..offsets[w + 1]].iter().enumerate() {
                if seen[v as usize] != w as u32 {
                    seen[v as usize] = w as u32;
                    first.push((w as u32, p as u32));
                    count[v as usize + 1] += 1;
                }
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let inv_offsets = count.clone();
        let mut inv_walk = vec![0u32; first.len()];
        let mut inv_pos = vec![0u32; first.len()];
        for &(w, p) in &first {
            let v = nodes[offsets[w as usize] + p as usize] as usize;
            inv_walk[count[v]] = w;
            inv_pos[count[v]] = p;
            count[v] += 1;
        }
        let eff_end = walk_lengths.iter().map(|&l| l - 1).collect();
        WalkStore {
            n,
            horizon,
            offsets,
            nodes,
            group_offsets,
            group_node,
            walk_group,
            inv_offsets,
            inv_walk,
            inv_pos,
            eff_end,
            cut: vec![false; walks],
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn walk_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn group_count(&self) -> usize {
        self.group_node.len()
    }

    /// Total node slots stored.
    pub fn slot_count(&self) -> usize {
        self.nodes.len()
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        use std::mem::size_of;
        self.offsets.len() * size_of::<usize>()
            + self.nodes.len() * 4
            + self.group_offsets.len() * size_of::<usize>()
            + self.group_node.len() * 4
            + self.walk_group.len() * 4
            + self.inv_offsets.len() * size_of::<usize>()
            + self.inv_walk.len() * 8
            + self.eff_end.len() * 4
            + self.cut.len()
    }

    /// Full node sequence of walk `w` as generated.
    pub fn walk(&self, w: usize) -> &[u32] {
        &self.nodes[self.offsets[w]..self.offsets[w + 1]]
    }

    pub fn start(&self, w: usize) -> usize {
        self.nodes[self.offsets[w]] as usize
    }

    /// Node at the effective end of walk `w`.
    pub fn effective_end(&self, w: usize) -> usize {
        self.nodes[self.offsets[w] + self.eff_end[w] as usize] as usize
    }

    pub fn effective_len(&self, w: usize) -> usize {
        self.eff_end[w] as usize + 1
    }

    pub fn is_cut(&self, w: usize) -> bool {
        self.cut[w]
    }

    pub fn group_of(&self, w: usize) -> usize {
        self.walk_group[w] as usize
    }

    pub fn group_node(&self, g: usize) -> usize {
        self.group_node[g] as usize
    }

    pub fn group_walks(&self, g: usize) -> std::ops::Range<usize> {
        self.group_offsets[g]..self.group_offsets[g + 1]
    }

    pub fn group_size(&self, g: usize) -> usize {
        self.group_offsets[g + 1] - self.group_offsets[g]
    }

    /// `(walk, first position)` of every walk visiting `v`, in walk order.
    pub fn occurrences(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.inv_offsets[v]..self.inv_offsets[v + 1];
        self.inv_walk[r.clone()]
            .iter()
            .zip(&self.inv_pos[r])
            .map(|(&w, &p)| (w as usize, p as usize))
    }

    pub fn occurrence_count(&self, v: usize) -> usize {
        self.inv_offsets[v + 1] - self.inv_offsets[v]
    }

    /// Truncates every walk containing `s` at its first occurrence of `s`, unless it
    /// was already truncated earlier. Returns the walks newly cut.
    pub fn truncate_at(&mut self, s: usize) -> Vec<usize> {
        let mut newly = Vec::new();
        for i in self.inv_offsets[s]..self.inv_offsets[s + 1] {
            let (w, p) = (self.inv_walk[i] as usize, self.inv_pos[i]);
            if !self.cut[w] {
                self.cut[w] = true;
                self.eff_end[w] = p;
                newly.push(w);
            } else if p < self.eff_end[w] {
                self.eff_end[w] = p;
            }
        }
        newly
    }

    /// Undoes every truncation.
    pub fn reset(&mut self) {
        for w in 0..self.walk_count() {
            self.eff_end[w] = (self.offsets[w + 1] - self.offsets[w] - 1) as u32;
        }
        self.cut.fill(false);
    }

    /// Estimate contributed by walk `w` under the current truncation: 1 if cut at a
    /// seed, else the initial opinion of its end node.
    #[inline]
    pub fn walk_value(&self, w: usize, initial: &[f64]) -> f64 {
        if self.cut[w] {
            1.0
        } else {
            initial[self.effective_end(w)]
        }
    }

    /// Estimate contributed by walk `w` under an arbitrary seed mask, ignoring the
    /// stored truncation state.
    pub fn walk_value_for(&self, w: usize, initial: &[f64], seed_mask: &[bool]) -> f64 {
        let walk = self.walk(w);
        if walk.iter().any(|&v| seed_mask[v as usize]) {
            1.0
        } else {
            initial[*walk.last().unwrap() as usize]
        }
    }

    /// Mean walk value of group `g` for `seeds`.
    pub fn group_estimate(&self, g: usize, initial: &[f64], seed_mask: &[bool]) -> f64 {
        let r = self.group_walks(g);
        let len = r.len() as f64;
        r.map(|w| self.walk_value_for(w, initial, seed_mask)).sum::<f64>() / len
    }

    /// Writes `start<TAB>v0,v1,...` for every walk (full, untruncated sequence).
    pub fn dump(&self, out: &mut impl Write) -> io::Result<()> {
        for w in 0..self.walk_count() {
            let seq: Vec<String> = self.walk(w).iter().map(u32::to_string).collect();
            writeln!(out, "{}\t{}", self.start(w), seq.join(","))?;
        }
        Ok(())
    }
}

/// `lambdas[v]` walks from every node `v`, each from stream `(seed, v, i)`.
/// Group `v` holds the walks of node `v`.
pub fn generate_walks(
    graph: &InfluenceGraph,
    state: &CampaignState,
    horizon: usize,
    lambdas: &[usize],
    rng_seed: u64,
) -> Result<WalkStore> {
    let n = graph.node_count();
    if lambdas.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} walk counts for {n} nodes",
            lambdas.len()
        )));
    }
    if let Some(v) = lambdas.iter().position(|&l| l == 0) {
        return Err(Error::NoWalks(v));
    }
    let seed = rng::derive(rng_seed, rng::TAG_WALKS);
    let per_node: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut nodes = Vec::with_capacity(lambdas[v] * 2);
            let mut lens = Vec::with_capacity(lambdas[v]);
            for i in 0..lambdas[v] {
                let before = nodes.len();
                let mut r = rng::stream(seed, v as u64, i as u64);
                walk_into(graph, state, v, horizon, &mut r, &mut nodes);
                lens.push((nodes.len() - before) as u32);
            }
            (nodes, lens)
        })
        .collect();
    let total_slots = per_node.iter().map(|p| p.0.len()).sum();
    let mut nodes = Vec::with_capacity(total_slots);
    let mut lens = Vec::with_capacity(lambdas.iter().sum());
    for (ns, ls) in per_node {
        nodes.extend(ns);
        lens.extend(ls);
    }
    Ok(WalkStore::build(
        n,
        horizon,
        lens,
        nodes,
        lambdas,
        (0..n as u32).collect(),
    ))
}

/// `theta` walks from start nodes drawn uniformly with replacement; sample `j` uses
/// stream `(seed, j)` for both its start and its steps. Each walk is its own group.
pub fn generate_sketches(
    graph: &InfluenceGraph,
    state: &CampaignState,
    horizon: usize,
    theta: usize,
    rng_seed: u64,
) -> Result<WalkStore> {
    if theta == 0 {
        return Err(Error::InvalidArgument("theta must be at least 1".into()));
    }
    let n = graph.node_count();
    let seed = rng::derive(rng_seed, rng::TAG_SKETCH);
    const CHUNK: usize = 1 << 12;
    let chunks: Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> = (0..theta.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(theta);
            let mut nodes = Vec::with_capacity(range.len() * 2);
            let mut lens = Vec::with_capacity(range.len());
            let mut starts = Vec::with_capacity(range.len());
            for j in range {
                let mut r = rng::stream(seed, j as u64, 0);
                let start = r.random_range(0..n);
                let before = nodes.len();
                walk_into(graph, state, start, horizon, &mut r, &mut nodes);
                lens.push((nodes.len() - before) as u32);
                starts.push(start as u32);
            }
            (nodes, lens, starts)
        })
        .collect();
    let mut nodes = Vec::new();
    let mut lens = Vec::with_capacity(theta);
    let mut starts = Vec::with_capacity(theta);
    for (ns, ls, ss) in chunks {
        nodes.extend(ns);
        lens.extend(ls);
        starts.extend(ss);
    }
    Ok(WalkStore::build(n, horizon, lens, nodes, &vec![1; theta], starts))
}
