use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate edge {src} -> {dst}")]
    DuplicateEdge {
        path: PathBuf,
        line: usize,
        src: usize,
        dst: usize,
    },

    #[error("node id {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("candidate id {candidate} out of range (r = {r})")]
    CandidateOutOfRange { candidate: usize, r: usize },

    #[error("candidate {candidate}: node {node} has in-edges but all incoming weights are zero")]
    ZeroIncomingWeight { candidate: usize, node: usize },

    #[error("candidate {candidate}: incoming weights of node {node} sum to {sum}, expected 1")]
    NotStochastic {
        candidate: usize,
        node: usize,
        sum: f64,
    },

    #[error("{what} of node {node} for candidate {candidate} is {value}, outside [0, 1]")]
    OutOfUnitRange {
        what: &'static str,
        candidate: usize,
        node: usize,
        value: f64,
    },

    #[error("missing {what} row for candidate {candidate}, node {node}")]
    MissingRow {
        what: &'static str,
        candidate: usize,
        node: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid score specification: {0}")]
    InvalidScore(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("seed set targets candidate {seeds} but the state belongs to candidate {state}")]
    CandidateMismatch { seeds: usize, state: usize },

    #[error("brute force over {count} subsets exceeds the cap of {cap}")]
    TooManySubsets { count: f64, cap: u64 },

    #[error("node {0} has no walks in the store")]
    NoWalks(usize),

    #[error("no sketch count satisfies the accuracy inequality (max attainable {max_lhs:.6}, target {target:.6})")]
    InfeasibleTheta { max_lhs: f64, target: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
