//! Per-candidate opinions and stubbornness, and the seed transformation.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{strip_comment, InfluenceGraph};

/// Opinion state of one candidate at timestamp `t`.
///
/// Entries of `initial`, `stubbornness` and `current` all lie in `[0, 1]`.
/// At `t == 0`, `current == initial`.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignState {
    pub candidate: usize,
    pub initial: Vec<f64>,
    pub stubbornness: Vec<f64>,
    pub current: Vec<f64>,
    pub t: usize,
}

impl CampaignState {
    pub fn new(candidate: usize, initial: Vec<f64>, stubbornness: Vec<f64>) -> Result<Self> {
        if initial.len() != stubbornness.len() {
            return Err(Error::InvalidArgument(format!(
                "opinion vector has {} entries, stubbornness has {}",
                initial.len(),
                stubbornness.len()
            )));
        }
        check_unit("initial opinion", candidate, &initial)?;
        check_unit("stubbornness", candidate, &stubbornness)?;
        Ok(CampaignState {
            candidate,
            current: initial.clone(),
            initial,
            stubbornness,
            t: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.initial.len()
    }

    /// Returns a copy with the seed transformation applied: every seed gets initial
    /// opinion 1 and stubbornness 1. Only valid at `t == 0`.
    pub fn apply_seeds(&self, seeds: &SeedSet) -> Result<CampaignState> {
        if seeds.candidate != self.candidate {
            return Err(Error::CandidateMismatch {
                seeds: seeds.candidate,
                state: self.candidate,
            });
        }
        if self.t != 0 {
            return Err(Error::InvalidArgument(format!(
                "seeds must be applied at t = 0, state is at t = {}",
                self.t
            )));
        }
        let n = self.node_count();
        let mut out = self.clone();
        for &s in seeds.nodes() {
            if s >= n {
                return Err(Error::NodeOutOfRange { node: s, n });
            }
            out.initial[s] = 1.0;
            out.stubbornness[s] = 1.0;
            out.current[s] = 1.0;
        }
        Ok(out)
    }
}

fn check_unit(what: &'static str, candidate: usize, values: &[f64]) -> Result<()> {
    for (node, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitRange {
                what,
                candidate,
                node,
                value,
            });
        }
    }
    Ok(())
}

/// Seeds for the target candidate, kept in insertion order without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeedSet {
    pub candidate: usize,
    nodes: Vec<usize>,
}

impl SeedSet {
    pub fn empty(candidate: usize) -> Self {
        SeedSet {
            candidate,
            nodes: Vec::new(),
        }
    }

    pub fn new(candidate: usize, nodes: Vec<usize>) -> Result<Self> {
        let mut set = SeedSet::empty(candidate);
        for v in nodes {
            if set.contains(v) {
                return Err(Error::InvalidArgument(format!("duplicate seed {v}")));
            }
            set.nodes.push(v);
        }
        Ok(set)
    }

    /// Validates every id against the node count.
    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.nodes.iter().find(|&&v| v >= n) {
            Some(&node) => Err(Error::NodeOutOfRange { node, n }),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }

    /// Appends `v`; returns false if it was already present.
    pub fn push(&mut self, v: usize) -> bool {
        if self.contains(v) {
            false
        } else {
            self.nodes.push(v);
            true
        }
    }

    /// The first `k` seeds in insertion order.
    pub fn prefix(&self, k: usize) -> SeedSet {
        SeedSet {
            candidate: self.candidate,
            nodes: self.nodes[..k.min(self.nodes.len())].to_vec(),
        }
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.nodes {
            if v < n {
                m[v] = true;
            }
        }
        m
    }
}

/// Fallback for stubbornness rows absent from the stubbornness file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StubbornnessPolicy {
    Uniform(f64),
}

impl StubbornnessPolicy {
    pub fn value(&self) -> f64 {
        match *self {
            StubbornnessPolicy::Uniform(d) => d,
        }
    }
}

impl FromStr for StubbornnessPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("stubbornness policy {s:?} is not of the form uniform:<d>"));
        let rest = s.strip_prefix("uniform:").ok_or_else(bad)?;
        let d: f64 = rest.trim().parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::Config(format!("uniform stubbornness {d} outside [0, 1]")));
        }
        Ok(StubbornnessPolicy::Uniform(d))
    }
}

/// Reads `candidate node value` rows into an `r x n` table. Cells not present stay `None`.
pub fn read_candidate_table(
    path: &Path,
    r: usize,
    n: usize,
) -> Result<Vec<Vec<Option<f64>>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_candidate_table(&text, path, r, n)
}

pub fn parse_candidate_table(
    text: &str,
    path: &Path,
    r: usize,
    n: usize,
) -> Result<Vec<Vec<Option<f64>>>> {
    let mut table = vec![vec![None; n]; r];
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
        let q: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad candidate id {:?}", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad node id {:?}", fields[1])))?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad value {:?}", fields[2])))?;
        if q >= r {
            return Err(Error::CandidateOutOfRange { candidate: q, r });
        }
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        if table[q][v].is_some() {
            return Err(err(format!("duplicate row for candidate {q}, node {v}")));
        }
        table[q][v] = Some(value);
    }
    Ok(table)
}

/// Where stubbornness values come from.
#[derive(Debug, Clone, Default)]
pub struct StubbornnessSource {
    pub file: Option<PathBuf>,
    pub default: Option<StubbornnessPolicy>,
}

/// Loads one `CampaignState` per candidate of `graph`, at `t = 0`.
///
/// Every (candidate, node) needs an opinion row. A missing stubbornness row is
/// filled from the default policy when one is given, and rejected otherwise.
pub fn load_campaigns(
    opinion_file: &Path,
    stubbornness: &StubbornnessSource,
    graph: &InfluenceGraph,
) -> Result<Vec<CampaignState>> {
    let (r, n) = (graph.candidate_count(), graph.node_count());
    let opinions = read_candidate_table(opinion_file, r, n)?;
    let stub = match &stubbornness.file {
        Some(p) => read_candidate_table(p, r, n)?,
        None => vec![vec![None; n]; r],
    };
    build_campaigns(&opinions, &stub, stubbornness.default)
}

pub fn build_campaigns(
    opinions: &[Vec<Option<f64>>],
    stubbornness: &[Vec<Option<f64>>],
    default: Option<StubbornnessPolicy>,
) -> Result<Vec<CampaignState>> {
    let mut out = Vec::with_capacity(opinions.len());
    for (q, (orow, srow)) in opinions.iter().zip(stubbornness).enumerate() {
        let mut initial = Vec::with_capacity(orow.len());
        let mut stub = Vec::with_capacity(orow.len());
        for (v, (o, s)) in orow.iter().zip(srow).enumerate() {
            let o = o.ok_or(Error::MissingRow {
                what: "opinion",
                candidate: q,
                node: v,
            })?;
            let s = match (s, default) {
                (Some(s), _) => *s,
                (None, Some(p)) => p.value(),
                (None, None) => {
                    return Err(Error::MissingRow {
                        what: "stubbornness",
                        candidate: q,
                        node: v,
                    })
                }
            };
            initial.push(o);
            stub.push(s);
        }
        out.push(CampaignState::new(q, initial, stub)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c1() -> CampaignState {
        CampaignState::new(0, vec![0.4, 0.8, 0.6, 0.9], vec![0.5; 4]).unwrap()
    }

    #[test]
    fn seeding_user_one() {
        let s = c1().apply_seeds(&SeedSet::new(0, vec![0]).unwrap()).unwrap();
        assert_eq!(s.initial, vec![1.0, 0.8, 0.6, 0.9]);
        assert_eq!(s.stubbornness[0], 1.0);
        assert_eq!(s.current, s.initial);
    }

    #[test]
    fn seeding_user_three() {
        let base = c1();
        let s = base.apply_seeds(&SeedSet::new(0, vec![2]).unwrap()).unwrap();
        assert_eq!(s.initial, vec![0.4, 0.8, 1.0, 0.9]);
        assert_eq!(s.stubbornness, vec![0.5, 0.5, 1.0, 0.5]);
        // input untouched
        assert_eq!(base.initial[2], 0.6);
    }

    #[test]
    fn empty_seed_set_is_identity() {
        let base = c1();
        assert_eq!(base.apply_seeds(&SeedSet::empty(0)).unwrap(), base);
    }

    #[test]
    fn seed_errors() {
        let base = c1();
        assert!(matches!(
            base.apply_seeds(&SeedSet::new(0, vec![4]).unwrap()),
            Err(Error::NodeOutOfRange { node: 4, n: 4 })
        ));
        assert!(matches!(
            base.apply_seeds(&SeedSet::new(1, vec![0]).unwrap()),
            Err(Error::CandidateMismatch { .. })
        ));
        assert!(SeedSet::new(0, vec![1, 1]).is_err());
    }

    #[test]
    fn stubbornness_out_of_range_names_location() {
        let text = "0 0 0.5\n0 1 1.2\n";
        let table = parse_candidate_table(text, Path::new("d.tsv"), 1, 2).unwrap();
        let op = vec![vec![Some(0.1), Some(0.2)]];
        let err = build_campaigns(&op, &table, None).unwrap_err();
        match err {
            Error::OutOfUnitRange { candidate, node, value, .. } => {
                assert_eq!((candidate, node), (0, 1));
                assert_eq!(value, 1.2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn uniform_default_fills_empty_file() {
        let table = parse_candidate_table("", Path::new("d.tsv"), 2, 3).unwrap();
        let op = vec![vec![Some(0.1); 3]; 2];
        let policy: StubbornnessPolicy = "uniform:0.5".parse().unwrap();
        let states = build_campaigns(&op, &table, Some(policy)).unwrap();
        for s in &states {
            assert_eq!(s.stubbornness, vec![0.5; 3]);
        }
    }

    #[test]
    fn missing_rows_rejected() {
        let empty = vec![vec![None; 2]];
        let op = vec![vec![Some(0.1), None]];
        assert!(matches!(
            build_campaigns(&op, &empty, Some(StubbornnessPolicy::Uniform(0.5))),
            Err(Error::MissingRow { what: "opinion", node: 1, .. })
        ));
        let op = vec![vec![Some(0.1), Some(0.2)]];
        assert!(matches!(
            build_campaigns(&op, &empty, None),
            Err(Error::MissingRow { what: "stubbornness", node: 0, .. })
        ));
    }

    #[test]
    fn policy_parse() {
        assert!("uniform:1.5".parse::<StubbornnessPolicy>().is_err());
        assert!("fixed:0.5".parse::<StubbornnessPolicy>().is_err());
    }

    proptest! {
        #[test]
        fn apply_seeds_idempotent_and_monotone(
            init in prop::collection::vec(0.0f64..=1.0, 6),
            stub in prop::collection::vec(0.0f64..=1.0, 6),
            small in prop::collection::btree_set(0usize..6, 0..4),
            extra in prop::collection::btree_set(0usize..6, 0..4),
        ) {
            let st = CampaignState::new(0, init, stub).unwrap();
            let s = SeedSet::new(0, small.iter().copied().collect()).unwrap();
            let once = st.apply_seeds(&s).unwrap();
            let twice = once.apply_seeds(&s).unwrap();
            prop_assert_eq!(&once, &twice);

            let big: Vec<usize> = small.union(&extra).copied().collect();
            let bigger = st.apply_seeds(&SeedSet::new(0, big).unwrap()).unwrap();
            for v in 0..6 {
                prop_assert!(once.initial[v] <= bigger.initial[v]);
            }
        }
    }
}
