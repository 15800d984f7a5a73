//! Voting scores over an opinion matrix at a fixed timestamp.
//!
//! Plurality uses a strict `>` against every other candidate, the rank counts
//! candidates with `b_x >= b_q` (so ties worsen the target's rank), and Copeland
//! counts strict wins and strict losses per pairwise contest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `r x n` opinions, one row per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionSnapshot {
    rows: Vec<Vec<f64>>,
}

impl OpinionSnapshot {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty(), "snapshot needs at least one candidate");
        let n = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == n), "ragged snapshot");
        OpinionSnapshot { rows }
    }

    pub fn candidate_count(&self) -> usize {
        self.rows.len()
    }

    pub fn node_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.rows[q]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Copy with row `q` replaced.
    pub fn with_row(&self, q: usize, row: Vec<f64>) -> Self {
        let mut rows = self.rows.clone();
        rows[q] = row;
        OpinionSnapshot::new(rows)
    }

    /// True when two candidates hold exactly equal opinions at some node.
    pub fn has_exact_ties(&self) -> bool {
        (0..self.node_count()).any(|v| {
            let r = self.candidate_count();
            (0..r).any(|a| (a + 1..r).any(|b| self.rows[a][v] == self.rows[b][v]))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    Cumulative,
    Plurality,
    PApproval,
    PositionalPApproval,
    Copeland,
}

impl ScoreKind {
    pub fn is_plurality_variant(&self) -> bool {
        matches!(
            self,
            ScoreKind::Plurality | ScoreKind::PApproval | ScoreKind::PositionalPApproval
        )
    }

    /// Scores whose value is a sum of independent per-node terms.
    pub fn is_additive(&self) -> bool {
        !matches!(self, ScoreKind::Copeland)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Cumulative => "cumulative",
            ScoreKind::Plurality => "plurality",
            ScoreKind::PApproval => "p-approval",
            ScoreKind::PositionalPApproval => "positional-p-approval",
            ScoreKind::Copeland => "copeland",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cumulative" => ScoreKind::Cumulative,
            "plurality" => ScoreKind::Plurality,
            "p-approval" => ScoreKind::PApproval,
            "positional-p-approval" => ScoreKind::PositionalPApproval,
            "copeland" => ScoreKind::Copeland,
            other => return Err(Error::InvalidScore(format!("unknown score kind {other:?}"))),
        })
    }
}

/// Which score to evaluate for which target.
///
/// `omega` is only read for the positional score; plurality and p-approval weight
/// every admitted position by 1. `tie_eps > 0` treats opinions within `tie_eps`
/// of each other as equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    pub target: usize,
    pub p: usize,
    pub omega: Vec<f64>,
    #[serde(default)]
    pub tie_eps: f64,
}

impl ScoreSpec {
    pub fn cumulative(target: usize) -> Self {
        Self::simple(ScoreKind::Cumulative, target, 1)
    }

    pub fn plurality(target: usize) -> Self {
        Self::simple(ScoreKind::Plurality, target, 1)
    }

    pub fn p_approval(target: usize, p: usize) -> Self {
        Self::simple(ScoreKind::PApproval, target, p)
    }

    pub fn copeland(target: usize) -> Self {
        Self::simple(ScoreKind::Copeland, target, 1)
    }

    pub fn positional(target: usize, p: usize, omega: Vec<f64>) -> Self {
        ScoreSpec {
            kind: ScoreKind::PositionalPApproval,
            target,
            p,
            omega,
            tie_eps: 0.0,
        }
    }

    /// Spec of the given kind with default parameters (`p = 1`, `omega` all ones).
    pub fn of_kind(kind: ScoreKind, target: usize, r: usize) -> Self {
        match kind {
            ScoreKind::PositionalPApproval => Self::positional(target, 1, vec![1.0; r]),
            _ => Self::simple(kind, target, 1),
        }
    }

    fn simple(kind: ScoreKind, target: usize, p: usize) -> Self {
        ScoreSpec {
            kind,
            target,
            p,
            omega: Vec::new(),
            tie_eps: 0.0,
        }
    }

    pub fn with_tie_eps(mut self, eps: f64) -> Self {
        self.tie_eps = eps;
        self
    }

    pub fn with_target(&self, target: usize) -> Self {
        ScoreSpec {
            target,
            ..self.clone()
        }
    }

    pub fn validate(&self, r: usize) -> Result<()> {
        if self.target >= r {
            return Err(Error::CandidateOutOfRange {
                candidate: self.target,
                r,
            });
        }
        if !(self.tie_eps >= 0.0 && self.tie_eps.is_finite()) {
            return Err(Error::InvalidScore(format!("tie eps {} must be >= 0", self.tie_eps)));
        }
        match self.kind {
            ScoreKind::Plurality if self.p != 1 => {
                return Err(Error::InvalidScore("plurality requires p = 1".into()))
            }
            ScoreKind::PApproval | ScoreKind::PositionalPApproval if !(1..=r).contains(&self.p) => {
                return Err(Error::InvalidScore(format!("p = {} outside [1, {r}]", self.p)))
            }
            _ => {}
        }
        if self.kind == ScoreKind::PositionalPApproval {
            check_omega(&self.omega, r)?;
        }
        Ok(())
    }

    /// Weight of rank position `pos` (1-based), zero beyond `p`.
    #[inline]
    pub fn position_weight(&self, pos: usize) -> f64 {
        if pos > self.p {
            return 0.0;
        }
        match self.kind {
            ScoreKind::PositionalPApproval => self.omega[pos - 1],
            _ => 1.0,
        }
    }

    /// `omega[1]`, the largest position weight.
    pub fn top_weight(&self) -> f64 {
        self.position_weight(1)
    }

    /// `omega[p]`, the smallest admitted position weight.
    pub fn last_weight(&self) -> f64 {
        self.position_weight(self.p)
    }
}

/// Entries in `[0, 1]`, non-increasing, length `r`.
pub fn check_omega(omega: &[f64], r: usize) -> Result<()> {
    if omega.len() != r {
        return Err(Error::InvalidScore(format!(
            "omega has {} entries, expected {r}",
            omega.len()
        )));
    }
    for (i, &w) in omega.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidScore(format!("omega[{}] = {w} outside [0, 1]", i + 1)));
        }
        if i > 0 && w > omega[i - 1] {
            return Err(Error::InvalidScore(format!(
                "omega is not non-increasing: omega[{}] = {w} > omega[{}] = {}",
                i + 1,
                i,
                omega[i - 1]
            )));
        }
    }
    Ok(())
}

/// Rank of candidate `q` at node `v`: the number of candidates `x` (including `q`)
/// with `b_xv >= b_qv`.
pub fn rank_beta(snapshot: &OpinionSnapshot, q: usize, v: usize) -> usize {
    rank_beta_eps(snapshot, q, v, 0.0)
}

pub fn rank_beta_eps(snapshot: &OpinionSnapshot, q: usize, v: usize, eps: f64) -> usize {
    let x = snapshot.row(q)[v];
    snapshot
        .rows()
        .iter()
        .filter(|row| row[v] >= x - eps)
        .count()
}

/// Scores a target opinion vector against fixed opinions of the other candidates.
///
/// Non-target values are stored per node in descending order so the rank of any
/// target value takes one short scan.
#[derive(Debug, Clone)]
pub struct TargetScorer {
    spec: ScoreSpec,
    n: usize,
    /// `n * (r - 1)` non-target opinions, grouped by node, descending.
    sorted_others: Vec<f64>,
    /// Non-target rows in candidate order, for pairwise contests.
    other_rows: Vec<Vec<f64>>,
}

impl TargetScorer {
    /// The target's own row in `snapshot` is ignored.
    pub fn new(snapshot: &OpinionSnapshot, spec: &ScoreSpec) -> Result<Self> {
        spec.validate(snapshot.candidate_count())?;
        let n = snapshot.node_count();
        let other_rows: Vec<Vec<f64>> = snapshot
            .rows()
            .iter()
            .enumerate()
            .filter(|(x, _)| *x != spec.target)
            .map(|(_, r)| r.clone())
            .collect();
        let m = other_rows.len();
        let mut sorted_others = Vec::with_capacity(n * m);
        for v in 0..n {
            let start = sorted_others.len();
            sorted_others.extend(other_rows.iter().map(|r| r[v]));
            sorted_others[start..].sort_by(|a, b| b.total_cmp(a));
        }
        Ok(TargetScorer {
            spec: spec.clone(),
            n,
            sorted_others,
            other_rows,
        })
    }

    pub fn spec(&self) -> &ScoreSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn other_count(&self) -> usize {
        self.other_rows.len()
    }

    pub fn other_rows(&self) -> &[Vec<f64>] {
        &self.other_rows
    }

    /// Rank the target would have at `v` with opinion `x`.
    #[inline]
    pub fn rank(&self, v: usize, x: f64) -> usize {
        let m = self.other_rows.len();
        let others = &self.sorted_others[v * m..(v + 1) * m];
        let eps = self.spec.tie_eps;
        1 + others.iter().take_while(|&&o| o >= x - eps).count()
    }

    /// Contribution of node `v` with target opinion `x` for additive scores.
    #[inline]
    pub fn node_value(&self, v: usize, x: f64) -> f64 {
        match self.spec.kind {
            ScoreKind::Cumulative => x,
            ScoreKind::Copeland => panic!("copeland has no per-node value"),
            _ => self.spec.position_weight(self.rank(v, x)),
        }
    }

    /// Outcome of the contest against non-target `i` at node `v`: `+1` if the target
    /// is strictly preferred, `-1` if strictly dispreferred, else `0`.
    #[inline]
    pub fn pair_sign(&self, i: usize, v: usize, x: f64) -> i64 {
        let o = self.other_rows[i][v];
        let eps = self.spec.tie_eps;
        if x > o + eps {
            1
        } else if x < o - eps {
            -1
        } else {
            0
        }
    }

    /// Wins minus losses of the target against each non-target.
    pub fn copeland_margins(&self, target: &[f64]) -> Vec<i64> {
        (0..self.other_rows.len())
            .map(|i| {
                target
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| self.pair_sign(i, v, x))
                    .sum()
            })
            .collect()
    }

    pub fn score(&self, target: &[f64]) -> f64 {
        debug_assert_eq!(target.len(), self.n);
        match self.spec.kind {
            ScoreKind::Copeland => copeland_from_margins(&self.copeland_margins(target)),
            _ => target
                .iter()
                .enumerate()
                .map(|(v, &x)| self.node_value(v, x))
                .sum(),
        }
    }
}

pub fn copeland_from_margins(margins: &[i64]) -> f64 {
    margins.iter().filter(|&&m| m > 0).count() as f64
}

/// Score of `spec.target` on `snapshot`.
pub fn score(snapshot: &OpinionSnapshot, spec: &ScoreSpec) -> Result<f64> {
    let scorer = TargetScorer::new(snapshot, spec)?;
    Ok(scorer.score(snapshot.row(spec.target)))
}

/// The same score evaluated with every candidate in turn as the target.
pub fn score_all(snapshot: &OpinionSnapshot, spec: &ScoreSpec) -> Result<Vec<f64>> {
    (0..snapshot.candidate_count())
        .map(|q| score(snapshot, &spec.with_target(q)))
        .collect()
}

/// True iff the target's score strictly exceeds every other candidate's.
pub fn winner_check(snapshot: &OpinionSnapshot, spec: &ScoreSpec) -> Result<bool> {
    let all = score_all(snapshot, spec)?;
    let mine = all[spec.target];
    Ok(all
        .iter()
        .enumerate()
        .all(|(x, &f)| x == spec.target || mine > f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::SeedSet;
    use crate::diffusion::snapshot;
    use crate::fixtures::{random_instance, running_example};
    use proptest::prelude::*;

    fn example_snapshot(seeds: &[usize]) -> OpinionSnapshot {
        let (g, cs) = running_example();
        snapshot(&g, &cs, &SeedSet::new(0, seeds.to_vec()).unwrap(), 1).unwrap()
    }

    #[test]
    fn rank_examples() {
        let s = example_snapshot(&[]);
        assert_eq!(rank_beta(&s, 0, 2), 2);
        assert_eq!(rank_beta(&s, 0, 0), 1);
        let single = OpinionSnapshot::new(vec![vec![0.3, 0.2]]);
        assert_eq!(rank_beta(&single, 0, 1), 1);
    }

    #[test]
    fn seeds_three_and_four() {
        let s3 = example_snapshot(&[2]);
        assert!((score(&s3, &ScoreSpec::cumulative(0)).unwrap() - 3.15).abs() < 1e-12);
        assert_eq!(score(&s3, &ScoreSpec::plurality(0)).unwrap(), 4.0);
        assert_eq!(score(&s3, &ScoreSpec::copeland(0)).unwrap(), 1.0);
        let s4 = example_snapshot(&[3]);
        assert_eq!(score(&s4, &ScoreSpec::plurality(0)).unwrap(), 3.0);
        assert_eq!(score(&s4, &ScoreSpec::copeland(0)).unwrap(), 1.0);
    }

    #[test]
    fn p_equal_r_scores_n() {
        let s = example_snapshot(&[]);
        assert_eq!(score(&s, &ScoreSpec::p_approval(0, 2)).unwrap(), 4.0);
    }

    #[test]
    fn winner_examples() {
        let spec = ScoreSpec::plurality(0);
        assert!(winner_check(&example_snapshot(&[2]), &spec).unwrap());
        let s0 = example_snapshot(&[]);
        assert_eq!(score_all(&s0, &spec).unwrap(), vec![2.0, 2.0]);
        assert!(!winner_check(&s0, &spec).unwrap());
        let single = OpinionSnapshot::new(vec![vec![0.0, 0.0]]);
        assert!(winner_check(&single, &ScoreSpec::cumulative(0)).unwrap());
    }

    #[test]
    fn omega_validation() {
        assert!(check_omega(&[0.5, 1.0], 2).is_err());
        assert!(check_omega(&[1.0, 0.5], 2).is_ok());
        assert!(check_omega(&[1.0], 2).is_err());
        assert!(ScoreSpec::p_approval(0, 3).validate(2).is_err());
        assert!(ScoreSpec::plurality(2).validate(2).is_err());
    }

    #[test]
    fn tie_eps_snaps_near_ties() {
        let s = OpinionSnapshot::new(vec![vec![0.5000001], vec![0.5]]);
        assert_eq!(score(&s, &ScoreSpec::plurality(0)).unwrap(), 1.0);
        let eps = ScoreSpec::plurality(0).with_tie_eps(1e-3);
        assert_eq!(score(&s, &eps).unwrap(), 0.0);
        assert_eq!(score(&s, &ScoreSpec::copeland(0).with_tie_eps(1e-3)).unwrap(), 0.0);
    }

    #[test]
    fn exact_ties_detected() {
        assert!(OpinionSnapshot::new(vec![vec![0.1, 0.2], vec![0.3, 0.2]]).has_exact_ties());
        assert!(!example_snapshot(&[]).has_exact_ties());
    }

    fn random_snapshot(seed: u64, r: usize) -> OpinionSnapshot {
        let (g, cs) = random_instance(seed, 6, r);
        snapshot(&g, &cs, &SeedSet::empty(0), 2).unwrap()
    }

    proptest! {
        #[test]
        fn plurality_variants_agree(seed in any::<u64>(), r in 1usize..5) {
            let s = random_snapshot(seed, r);
            let a = score(&s, &ScoreSpec::plurality(0)).unwrap();
            let b = score(&s, &ScoreSpec::p_approval(0, 1)).unwrap();
            let mut omega = vec![0.0; r];
            omega[0] = 1.0;
            let c = score(&s, &ScoreSpec::positional(0, 1, omega)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a, c);
        }

        #[test]
        fn score_ranges(seed in any::<u64>(), r in 1usize..5) {
            let s = random_snapshot(seed, r);
            let n = s.node_count() as f64;
            for q in 0..r {
                let cop = score(&s, &ScoreSpec::copeland(q)).unwrap();
                prop_assert!(cop >= 0.0 && cop <= (r - 1) as f64);
                for spec in [ScoreSpec::cumulative(q), ScoreSpec::plurality(q), ScoreSpec::p_approval(q, r)] {
                    let f = score(&s, &spec).unwrap();
                    prop_assert!(f >= 0.0 && f <= n + 1e-12);
                }
            }
        }

        #[test]
        fn rank_matches_counting(seed in any::<u64>(), r in 1usize..5) {
            let s = random_snapshot(seed, r);
            for q in 0..r {
                let scorer = TargetScorer::new(&s, &ScoreSpec::plurality(q)).unwrap();
                for v in 0..s.node_count() {
                    prop_assert_eq!(scorer.rank(v, s.row(q)[v]), rank_beta(&s, q, v));
                }
            }
        }
    }
}
