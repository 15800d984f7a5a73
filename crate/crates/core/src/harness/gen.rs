//! Synthetic datasets in the on-disk format read by [`Dataset::load`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::campaign::{read_candidate_table, CampaignState, StubbornnessPolicy};
use crate::config::Dataset;
use crate::error::{Error, Result};
use crate::graph::{parse_edge_file, InfluenceGraph, Normalization, RawEdge, WeightTransform};
use crate::rng;

/// Edge structure of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum GenKind {
    /// Preferential attachment: each new node links to `attach` existing nodes in
    /// both directions, chosen proportionally to degree.
    ScaleFree { attach: usize },
    /// Every ordered pair `(u, v)`, `u != v`, is an edge with probability `p`.
    Random { p: f64 },
    /// Induced subgraph on a uniform sample of `round(fraction * n)` nodes of an
    /// existing dataset, ids renumbered in ascending order.
    Subsample { source: PathBuf, fraction: f64 },
    /// `src dst weight` files: one shared by every candidate, or one per candidate.
    EdgeList { files: Vec<PathBuf> },
}

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub kind: GenKind,
    pub nodes: usize,
    pub candidates: usize,
    pub rng_seed: u64,
    /// `candidate node value` table replacing the random opinions.
    pub opinions: Option<PathBuf>,
    pub stubbornness: Option<StubbornnessOverride>,
}

#[derive(Debug, Clone)]
pub enum StubbornnessOverride {
    Policy(StubbornnessPolicy),
    File(PathBuf),
}

/// Generated data held in memory; `edges[q]` is sorted by `(src, dst)` and
/// normalized per destination.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub nodes: usize,
    pub edges: Vec<Vec<(usize, usize, f64)>>,
    pub opinions: Vec<Vec<f64>>,
    pub stubbornness: Vec<Vec<f64>>,
}

impl SyntheticDataset {
    pub fn candidates(&self) -> usize {
        self.edges.len()
    }

    /// In-memory graph and campaigns, identical to loading the written files.
    pub fn build(&self) -> Result<(InfluenceGraph, Vec<CampaignState>)> {
        let raw: Vec<Vec<RawEdge>> = self
            .edges
            .iter()
            .map(|es| es.iter().map(|&(s, d, w)| RawEdge::new(s, d, w)).collect())
            .collect();
        let graph = InfluenceGraph::from_raw_edges(self.nodes, &raw, Normalization::Normalize, &[])?;
        let campaigns = self
            .opinions
            .iter()
            .zip(&self.stubbornness)
            .enumerate()
            .map(|(q, (b, d))| CampaignState::new(q, b.clone(), d.clone()))
            .collect::<Result<_>>()?;
        Ok((graph, campaigns))
    }

    /// Writes `config.toml`, `c{q+1}.tsv`, `opinions.tsv` and `stubbornness.tsv`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let r = self.candidates();
        let names: Vec<String> = (1..=r).map(|q| format!("c{q}.tsv")).collect();
        for (name, edges) in names.iter().zip(&self.edges) {
            let mut text = String::with_capacity(edges.len() * 16);
            for &(s, d, w) in edges {
                writeln!(text, "{s}\t{d}\t{w}").unwrap();
            }
            write_file(&dir.join(name), &text)?;
        }
        write_file(&dir.join("opinions.tsv"), &candidate_table(&self.opinions))?;
        write_file(&dir.join("stubbornness.tsv"), &candidate_table(&self.stubbornness))?;
        let quoted: Vec<String> = names.iter().map(|n| format!("{n:?}")).collect();
        let config = format!(
            "candidates = {r}\nnodes = {n}\ntarget = 0\nedges = [{edges}]\nopinions = \"opinions.tsv\"\n\
             stubbornness = \"stubbornness.tsv\"\ntransform = \"weight\"\nmu = {mu:?}\n",
            n = self.nodes,
            edges = quoted.join(", "),
            mu = crate::config::DEFAULT_MU,
        );
        let path = dir.join("config.toml");
        write_file(&path, &config)?;
        Ok(path)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn candidate_table(rows: &[Vec<f64>]) -> String {
    let mut text = String::new();
    for (q, row) in rows.iter().enumerate() {
        for (v, x) in row.iter().enumerate() {
            writeln!(text, "{q}\t{v}\t{x}").unwrap();
        }
    }
    text
}

fn gen_stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    rng::stream(rng::derive(seed, rng::TAG_GEN), purpose, index)
}

const STRUCTURE: u64 = 0;
const WEIGHTS: u64 = 1;
const OPINIONS: u64 = 2;
const STUBBORNNESS: u64 = 3;
const SAMPLE: u64 = 4;

/// Preferential-attachment edge set over `n` nodes. The first `attach + 1` nodes form
/// a complete graph; every edge is present in both directions.
pub fn scale_free_edges(n: usize, attach: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if n == 0 {
        return edges;
    }
    let core = (attach + 1).min(n);
    // each undirected edge contributes both endpoints, so sampling an entry is
    // sampling a node proportionally to its degree
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * attach * n);
    for u in 0..core {
        for v in (u + 1)..core {
            edges.push((u, v));
            edges.push((v, u));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut chosen = HashSet::with_capacity(attach);
    for v in core..n {
        chosen.clear();
        while chosen.len() < attach.min(v) {
            let u = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            chosen.insert(u);
        }
        let mut targets: Vec<usize> = chosen.iter().copied().collect();
        targets.sort_unstable();
        for u in targets {
            edges.push((u, v));
            edges.push((v, u));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    edges
}

/// Directed `G(n, p)` without self-loops, by geometric skipping over the
/// `n (n - 1)` ordered pairs.
pub fn random_edges(n: usize, p: f64, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    let mut edges = Vec::new();
    if n < 2 || p == 0.0 {
        return Ok(edges);
    }
    let slots = (n as u64) * (n as u64 - 1);
    let ln_q = (1.0 - p).ln();
    let mut idx: u64 = 0;
    loop {
        if p < 1.0 {
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / ln_q).floor();
            if skip >= (slots - idx) as f64 {
                break;
            }
            idx += skip as u64;
        }
        if idx >= slots {
            break;
        }
        let src = idx / (n as u64 - 1);
        let off = idx % (n as u64 - 1);
        let dst = if off >= src { off + 1 } else { off };
        edges.push((src as usize, dst as usize));
        idx += 1;
    }
    Ok(edges)
}

/// Divides every weight by its destination's incoming total and sorts by `(src, dst)`.
fn normalize(n: usize, q: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Vec<(usize, usize, f64)>> {
    let mut sum = vec![0.0; n];
    for &(_, d, w) in &edges {
        sum[d] += w;
    }
    for (_, d, w) in edges.iter_mut() {
        if sum[*d] <= 0.0 {
            return Err(Error::ZeroIncomingWeight { candidate: q, node: *d });
        }
        *w /= sum[*d];
    }
    edges.sort_by_key(|e| (e.0, e.1));
    Ok(edges)
}

fn uniform_rows(seed: u64, purpose: u64, r: usize, n: usize) -> Vec<Vec<f64>> {
    (0..r)
        .map(|q| {
            let mut g = gen_stream(seed, purpose, q as u64);
            (0..n).map(|_| g.random::<f64>()).collect()
        })
        .collect()
}

fn full_table(path: &Path, r: usize, n: usize, what: &'static str) -> Result<Vec<Vec<f64>>> {
    let table = read_candidate_table(path, r, n)?;
    table
        .into_iter()
        .enumerate()
        .map(|(q, row)| {
            row.into_iter()
                .enumerate()
                .map(|(v, x)| {
                    let x = x.ok_or(Error::MissingRow { what, candidate: q, node: v })?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::OutOfUnitRange { what, candidate: q, node: v, value: x });
                    }
                    Ok(x)
                })
                .collect()
        })
        .collect()
}

/// Builds a dataset in memory. The same spec and seed always produce the same data.
pub fn gen_synthetic(spec: &GenSpec) -> Result<SyntheticDataset> {
    if spec.candidates == 0 {
        return Err(Error::InvalidArgument("at least one candidate is required".into()));
    }
    let seed = spec.rng_seed;
    let weigh = |n: usize, structure: &[(usize, usize)]| -> Result<Vec<Vec<(usize, usize, f64)>>> {
        (0..spec.candidates)
            .map(|q| {
                let mut g = gen_stream(seed, WEIGHTS, q as u64);
                let raw = structure
                    .iter()
                    .map(|&(s, d)| (s, d, 1.0 - g.random::<f64>()))
                    .collect();
                normalize(n, q, raw)
            })
            .collect()
    };
    let mut data = match &spec.kind {
        GenKind::ScaleFree { attach } => {
            if *attach == 0 {
                return Err(Error::InvalidArgument("attach must be at least 1".into()));
            }
            let structure = scale_free_edges(spec.nodes, *attach, &mut gen_stream(seed, STRUCTURE, 0));
            random_attributes(spec, weigh(spec.nodes, &structure)?)
        }
        GenKind::Random { p } => {
            let structure = random_edges(spec.nodes, *p, &mut gen_stream(seed, STRUCTURE, 0))?;
            random_attributes(spec, weigh(spec.nodes, &structure)?)
        }
        GenKind::EdgeList { files } => {
            if files.len() != 1 && files.len() != spec.candidates {
                return Err(Error::InvalidArgument(format!(
                    "{} edge lists for {} candidates",
                    files.len(),
                    spec.candidates
                )));
            }
            let mut edges = Vec::with_capacity(spec.candidates);
            for q in 0..spec.candidates {
                let file = &files[q % files.len()];
                let raw = parse_edge_file(file, WeightTransform::Weight)?;
                let mut seen = HashSet::new();
                for e in &raw {
                    if e.src >= spec.nodes || e.dst >= spec.nodes {
                        return Err(Error::NodeOutOfRange { node: e.src.max(e.dst), n: spec.nodes });
                    }
                    if !seen.insert((e.src, e.dst)) {
                        return Err(Error::DuplicateEdge {
                            path: file.clone(),
                            line: e.line,
                            src: e.src,
                            dst: e.dst,
                        });
                    }
                }
                edges.push(normalize(spec.nodes, q, raw.iter().map(|e| (e.src, e.dst, e.weight)).collect())?);
            }
            random_attributes(spec, edges)
        }
        GenKind::Subsample { source, fraction } => subsample(source, *fraction, seed)?,
    };
    let (r, n) = (data.candidates(), data.nodes);
    if let Some(path) = &spec.opinions {
        data.opinions = full_table(path, r, n, "opinion")?;
    }
    match &spec.stubbornness {
        Some(StubbornnessOverride::Policy(p)) => data.stubbornness = vec![vec![p.value(); n]; r],
        Some(StubbornnessOverride::File(path)) => data.stubbornness = full_table(path, r, n, "stubbornness")?,
        None => {}
    }
    Ok(data)
}

fn random_attributes(spec: &GenSpec, edges: Vec<Vec<(usize, usize, f64)>>) -> SyntheticDataset {
    SyntheticDataset {
        nodes: spec.nodes,
        opinions: uniform_rows(spec.rng_seed, OPINIONS, spec.candidates, spec.nodes),
        stubbornness: uniform_rows(spec.rng_seed, STUBBORNNESS, spec.candidates, spec.nodes),
        edges,
    }
}

fn subsample(source: &Path, fraction: f64, seed: u64) -> Result<SyntheticDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    let ds = Dataset::load(source)?;
    let n = ds.graph.node_count();
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut keep = index::sample(&mut gen_stream(seed, SAMPLE, 0), n, m).into_vec();
    keep.sort_unstable();
    let mut new_id = vec![usize::MAX; n];
    for (i, &v) in keep.iter().enumerate() {
        new_id[v] = i;
    }
    let base = source.parent().unwrap_or_else(|| Path::new("."));
    let transform = ds.config.weight_transform();
    let mut edges = Vec::with_capacity(ds.config.edges.len());
    for (q, file) in ds.config.edges.iter().enumerate() {
        let path = if file.is_absolute() { file.clone() } else { base.join(file) };
        let raw = parse_edge_file(&path, transform)?;
        let kept = raw
            .iter()
            .filter(|e| new_id[e.src] != usize::MAX && new_id[e.dst] != usize::MAX)
            .map(|e| (new_id[e.src], new_id[e.dst], e.weight))
            .collect();
        edges.push(normalize(m, q, kept)?);
    }
    let pick = |rows: Vec<f64>| keep.iter().map(|&v| rows[v]).collect::<Vec<f64>>();
    Ok(SyntheticDataset {
        nodes: m,
        opinions: ds.campaigns.iter().map(|c| pick(c.initial.clone())).collect(),
        stubbornness: ds.campaigns.iter().map(|c| pick(c.stubbornness.clone())).collect(),
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GenKind, nodes: usize) -> GenSpec {
        GenSpec {
            kind,
            nodes,
            candidates: 2,
            rng_seed: 7,
            opinions: None,
            stubbornness: None,
        }
    }

    #[test]
    fn scale_free_shape() {
        let mut g = gen_stream(1, STRUCTURE, 0);
        let e = scale_free_edges(200, 3, &mut g);
        // complete core on 4 nodes plus 3 mutual links per later node
        assert_eq!(e.len(), 12 + 2 * 3 * 196);
        let set: HashSet<_> = e.iter().copied().collect();
        assert_eq!(set.len(), e.len());
        assert!(e.iter().all(|&(s, d)| s != d && set.contains(&(d, s))));
    }

    #[test]
    fn random_edge_density() {
        let mut g = gen_stream(1, STRUCTURE, 0);
        let e = random_edges(300, 0.05, &mut g).unwrap();
        let expected = 0.05 * 300.0 * 299.0;
        let sd = (expected * 0.95f64).sqrt();
        assert!((e.len() as f64 - expected).abs() < 4.0 * sd);
        assert!(e.iter().all(|&(s, d)| s != d && s < 300 && d < 300));
        let all = random_edges(5, 1.0, &mut g).unwrap();
        assert_eq!(all.len(), 20);
        assert!(random_edges(5, 0.0, &mut g).unwrap().is_empty());
    }

    #[test]
    fn generation_is_reproducible_and_loads() {
        let a = gen_synthetic(&spec(GenKind::ScaleFree { attach: 2 }, 50)).unwrap();
        let b = gen_synthetic(&spec(GenKind::ScaleFree { attach: 2 }, 50)).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let cfg = a.write(dir.path()).unwrap();
        let ds = Dataset::load(&cfg).unwrap();
        assert_eq!(ds.graph.node_count(), 50);
        assert!(ds.graph.stochasticity_violations().is_empty());
        let c = gen_synthetic(&spec(GenKind::Random { p: 0.1 }, 50)).unwrap();
        assert_ne!(a.edges, c.edges);
        let (g, cs) = a.build().unwrap();
        for q in 0..2 {
            let x = crate::diffusion::propagate(&g, &cs[q], 5).unwrap().current;
            let y = crate::diffusion::propagate(&ds.graph, &ds.campaigns[q], 5).unwrap().current;
            assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}
