//! Directed influence graph with one column-stochastic weight matrix per candidate.
//!
//! For candidate `q`, `w(q; i, j)` is the influence user `i` exerts on user `j`.
//! Incoming weights of every node sum to one. A node without in-edges behaves as
//! if it carried a self-loop of weight one, so it keeps its opinion under the
//! DeGroot step and a reverse walk standing at it stays put.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Tolerance used when checking that incoming weights sum to one.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// How the third column of an edge file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightTransform {
    /// Interaction counts `a >= 0`, mapped to `1 - exp(-a / mu)` before normalization.
    RawCount { mu: f64 },
    /// Weights already in `[0, 1]`.
    Weight,
}

impl WeightTransform {
    pub fn apply(&self, value: f64) -> f64 {
        match *self {
            WeightTransform::RawCount { mu } => 1.0 - (-value / mu).exp(),
            WeightTransform::Weight => value,
        }
    }
}

/// One edge as read from an input file, before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEdge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    /// 1-based source line, 0 when the edge did not come from a file.
    pub line: usize,
}

impl RawEdge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        RawEdge {
            src,
            dst,
            weight,
            line: 0,
        }
    }
}

/// Compressed adjacency for a single candidate. Incoming lists are grouped by
/// destination (used by propagation and reverse walks); outgoing lists are grouped
/// by source (used for hop-bounded reachability).
#[derive(Debug, Clone)]
pub struct CandidateWeights {
    in_offsets: Vec<usize>,
    in_src: Vec<u32>,
    in_weight: Vec<f64>,
    in_prefix: Vec<f64>,
    out_offsets: Vec<usize>,
    out_dst: Vec<u32>,
    out_weight: Vec<f64>,
}

impl CandidateWeights {
    fn build(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let (in_offsets, in_order) = group_by(n, edges, |e| e.1);
        let (out_offsets, out_order) = group_by(n, edges, |e| e.0);

        let in_src: Vec<u32> = in_order.iter().map(|&i| edges[i].0 as u32).collect();
        let in_weight: Vec<f64> = in_order.iter().map(|&i| edges[i].2).collect();
        let mut in_prefix = vec![0.0; in_weight.len()];
        for v in 0..n {
            let mut acc = 0.0;
            for e in in_offsets[v]..in_offsets[v + 1] {
                acc += in_weight[e];
                in_prefix[e] = acc;
            }
        }
        let out_dst = out_order.iter().map(|&i| edges[i].1 as u32).collect();
        let out_weight = out_order.iter().map(|&i| edges[i].2).collect();

        CandidateWeights {
            in_offsets,
            in_src,
            in_weight,
            in_prefix,
            out_offsets,
            out_dst,
            out_weight,
        }
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    /// In-neighbors `j` of `v` with weights `w(j, v)`.
    #[inline]
    pub fn incoming(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.in_offsets[v]..self.in_offsets[v + 1];
        self.in_src[range.clone()]
            .iter()
            .zip(&self.in_weight[range])
            .map(|(&j, &w)| (j as usize, w))
    }

    #[inline]
    pub(crate) fn incoming_slices(&self, v: usize) -> (&[u32], &[f64]) {
        let range = self.in_offsets[v]..self.in_offsets[v + 1];
        (&self.in_src[range.clone()], &self.in_weight[range])
    }

    /// Out-neighbors `j` of `v` with weights `w(v, j)`.
    #[inline]
    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.out_offsets[v]..self.out_offsets[v + 1];
        self.out_dst[range.clone()]
            .iter()
            .zip(&self.out_weight[range])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Picks an in-neighbor of `v` with probability proportional to its weight,
    /// given `u` uniform in `[0, 1)`. Returns `v` itself when it has no in-edges.
    #[inline]
    pub fn sample_in_neighbor(&self, v: usize, u: f64) -> usize {
        let range = self.in_offsets[v]..self.in_offsets[v + 1];
        if range.is_empty() {
            return v;
        }
        let prefix = &self.in_prefix[range.clone()];
        let x = u * prefix[prefix.len() - 1];
        let idx = prefix.partition_point(|&c| c <= x).min(prefix.len() - 1);
        self.in_src[range.start + idx] as usize
    }

    pub fn edge_count(&self) -> usize {
        self.in_src.len()
    }

    /// Sum of incoming weights of `v`, counting the implicit self-loop.
    pub fn incoming_sum(&self, v: usize) -> f64 {
        if self.in_degree(v) == 0 {
            1.0
        } else {
            self.incoming(v).map(|(_, w)| w).sum()
        }
    }
}

fn group_by(
    n: usize,
    edges: &[(usize, usize, f64)],
    key: impl Fn(&(usize, usize, f64)) -> usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e) + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut order = vec![0usize; edges.len()];
    for (i, e) in edges.iter().enumerate() {
        let k = key(e);
        order[cursor[k]] = i;
        cursor[k] += 1;
    }
    (offsets, order)
}

/// Whether incoming weights are rescaled to sum to one, or required to already do so.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Normalize,
    Require,
}

#[derive(Debug, Clone)]
pub struct InfluenceGraph {
    n: usize,
    candidates: Vec<CandidateWeights>,
}

impl InfluenceGraph {
    /// Builds the graph from per-candidate raw edge lists. Under `Normalize`, any
    /// non-negative finite weights are accepted and rescaled per destination.
    ///
    /// `source` names the origin of each list for error messages.
    pub fn from_raw_edges(
        n: usize,
        per_candidate: &[Vec<RawEdge>],
        normalization: Normalization,
        source: &[PathBuf],
    ) -> Result<Self> {
        if per_candidate.is_empty() {
            return Err(Error::Config("at least one candidate is required".into()));
        }
        let mut candidates = Vec::with_capacity(per_candidate.len());
        for (q, edges) in per_candidate.iter().enumerate() {
            let path = source.get(q).cloned().unwrap_or_default();
            let mut seen = HashSet::with_capacity(edges.len());
            let mut in_sum = vec![0.0f64; n];
            let mut in_deg = vec![0usize; n];
            for e in edges {
                for id in [e.src, e.dst] {
                    if id >= n {
                        return Err(Error::NodeOutOfRange { node: id, n });
                    }
                }
                if !seen.insert((e.src, e.dst)) {
                    return Err(Error::DuplicateEdge {
                        path: path.clone(),
                        line: e.line,
                        src: e.src,
                        dst: e.dst,
                    });
                }
                let in_range = match normalization {
                    Normalization::Normalize => e.weight >= 0.0 && e.weight.is_finite(),
                    Normalization::Require => (0.0..=1.0).contains(&e.weight),
                };
                if !in_range {
                    return Err(Error::Parse {
                        path: path.clone(),
                        line: e.line,
                        message: format!("edge weight {} is not a valid weight", e.weight),
                    });
                }
                in_sum[e.dst] += e.weight;
                in_deg[e.dst] += 1;
            }
            for v in 0..n {
                if in_deg[v] == 0 {
                    continue;
                }
                if in_sum[v] <= 0.0 {
                    return Err(Error::ZeroIncomingWeight { candidate: q, node: v });
                }
                if normalization == Normalization::Require
                    && (in_sum[v] - 1.0).abs() > STOCHASTIC_TOLERANCE
                {
                    return Err(Error::NotStochastic {
                        candidate: q,
                        node: v,
                        sum: in_sum[v],
                    });
                }
            }
            let normalized: Vec<(usize, usize, f64)> = edges
                .iter()
                .map(|e| {
                    let w = match normalization {
                        Normalization::Normalize => e.weight / in_sum[e.dst],
                        Normalization::Require => e.weight,
                    };
                    (e.src, e.dst, w)
                })
                .collect();
            candidates.push(CandidateWeights::build(n, &normalized));
        }
        Ok(InfluenceGraph { n, candidates })
    }

    /// Convenience constructor: the same normalized edge list for every candidate.
    pub fn shared(n: usize, r: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let raw: Vec<RawEdge> = edges
            .iter()
            .map(|&(s, d, w)| RawEdge::new(s, d, w))
            .collect();
        Self::from_raw_edges(n, &vec![raw; r], Normalization::Normalize, &[])
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidate(&self, q: usize) -> &CandidateWeights {
        &self.candidates[q]
    }

    /// Number of edges carried by candidate `q` (implicit self-loops excluded).
    pub fn edge_count(&self, q: usize) -> usize {
        self.candidates[q].edge_count()
    }

    /// Size of the union of all candidates' edge sets.
    pub fn union_edge_count(&self) -> usize {
        let mut seen = HashSet::new();
        for c in &self.candidates {
            for v in 0..self.n {
                for (j, _) in c.incoming(v) {
                    seen.insert((j, v));
                }
            }
        }
        seen.len()
    }

    /// Nodes `v` (with candidate) whose incoming weights do not sum to one.
    pub fn stochasticity_violations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (q, c) in self.candidates.iter().enumerate() {
            for v in 0..self.n {
                let s = c.incoming_sum(v);
                if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    out.push((q, v, s));
                }
            }
        }
        out
    }
}

/// Parses one edge file. Lines are `src dst value` separated by tabs or spaces;
/// `#` starts a comment.
pub fn parse_edge_file(path: &Path, transform: WeightTransform) -> Result<Vec<RawEdge>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edges(&text, path, transform)
}

pub fn parse_edges(text: &str, path: &Path, transform: WeightTransform) -> Result<Vec<RawEdge>> {
    let mut edges = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad source id {:?}", fields[0])))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad destination id {:?}", fields[1])))?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad value {:?}", fields[2])))?;
        match transform {
            WeightTransform::RawCount { .. } if !(value >= 0.0 && value.is_finite()) => {
                return Err(err(format!("interaction count {value} must be a finite value >= 0")));
            }
            WeightTransform::Weight if !(0.0..=1.0).contains(&value) => {
                return Err(err(format!("weight {value} outside [0, 1]")));
            }
            _ => {}
        }
        edges.push(RawEdge {
            src,
            dst,
            weight: transform.apply(value),
            line: line_no,
        });
    }
    Ok(edges)
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// Loads one edge file per candidate and builds the graph.
pub fn load_graph(
    n: usize,
    edge_files: &[PathBuf],
    transform: WeightTransform,
    normalization: Normalization,
) -> Result<InfluenceGraph> {
    if let WeightTransform::RawCount { mu } = transform {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
    }
    let per_candidate = edge_files
        .iter()
        .map(|p| parse_edge_file(p, transform))
        .collect::<Result<Vec<_>>>()?;
    InfluenceGraph::from_raw_edges(n, &per_candidate, normalization, edge_files)
}
