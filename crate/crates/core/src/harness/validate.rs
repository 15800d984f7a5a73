//! Dataset diagnostics: every input invariant checked independently, with counts.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::campaign::read_candidate_table;
use crate::config::{DatasetConfig, TransformKind};
use crate::error::{Error, Result};
use crate::graph::{parse_edge_file, RawEdge, STOCHASTIC_TOLERANCE};
use crate::scores::check_omega;

/// Failures listed per check before the rest are summarized as a count.
const MAX_DETAILS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Items examined (edges, nodes, cells).
    pub checked: usize,
    pub failures: usize,
    pub details: Vec<String>,
}

impl Check {
    fn new(name: impl Into<String>, checked: usize, failures: Vec<String>) -> Self {
        let count = failures.len();
        Check {
            name: name.into(),
            passed: count == 0,
            checked,
            failures: count,
            details: failures.into_iter().take(MAX_DETAILS).collect(),
        }
    }

    fn error(name: impl Into<String>, err: &Error) -> Self {
        Check {
            name: name.into(),
            passed: false,
            checked: 0,
            failures: 1,
            details: vec![err.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{status}  {} ({} checked, {} failed)", c.name, c.checked, c.failures)?;
            for d in &c.details {
                writeln!(f, "      {d}")?;
            }
            if c.failures > c.details.len() {
                writeln!(f, "      ... {} more", c.failures - c.details.len())?;
            }
        }
        Ok(())
    }
}

fn edge_checks(q: usize, n: usize, transform: TransformKind, edges: &[RawEdge], checks: &mut Vec<Check>) {
    let mut range = Vec::new();
    let mut dup = Vec::new();
    let mut seen = HashSet::with_capacity(edges.len());
    let mut sum = vec![0.0f64; n];
    let mut indeg = vec![0usize; n];
    for e in edges {
        if e.src >= n || e.dst >= n {
            range.push(format!("line {}: edge {} -> {} with n = {n}", e.line, e.src, e.dst));
            continue;
        }
        if !seen.insert((e.src, e.dst)) {
            dup.push(format!("line {}: duplicate edge {} -> {}", e.line, e.src, e.dst));
        }
        sum[e.dst] += e.weight;
        indeg[e.dst] += 1;
    }
    checks.push(Check::new(format!("candidate {q}: node ids in range"), edges.len(), range));
    checks.push(Check::new(format!("candidate {q}: no duplicate edges"), edges.len(), dup));
    let mut stoch = Vec::new();
    for v in 0..n {
        if indeg[v] == 0 {
            continue;
        }
        let bad = match transform {
            TransformKind::Weight => (sum[v] - 1.0).abs() > STOCHASTIC_TOLERANCE,
            TransformKind::RawCount => sum[v] <= 0.0,
        };
        if bad {
            stoch.push(format!("node {v}: incoming weights sum to {}", sum[v]));
        }
    }
    let name = match transform {
        TransformKind::Weight => format!("candidate {q}: incoming weights sum to 1"),
        TransformKind::RawCount => format!("candidate {q}: incoming weights normalizable"),
    };
    checks.push(Check::new(name, n, stoch));
}

fn table_checks(
    what: &str,
    path: &Path,
    r: usize,
    n: usize,
    fallback: bool,
    checks: &mut Vec<Check>,
) {
    let table = match read_candidate_table(path, r, n) {
        Ok(t) => t,
        Err(e) => {
            checks.push(Check::error(format!("{what} file parses"), &e));
            return;
        }
    };
    let mut missing = Vec::new();
    let mut range = Vec::new();
    for (q, row) in table.iter().enumerate() {
        for (v, x) in row.iter().enumerate() {
            match x {
                None if !fallback => missing.push(format!("candidate {q}, node {v}")),
                None => {}
                Some(x) if !(0.0..=1.0).contains(x) => {
                    range.push(format!("candidate {q}, node {v}: {x}"))
                }
                Some(_) => {}
            }
        }
    }
    checks.push(Check::new(format!("{what}: one row per candidate and node"), r * n, missing));
    checks.push(Check::new(format!("{what}: values in [0, 1]"), r * n, range));
}

/// Validates the dataset described by the config at `path`, plus an optional
/// position-weight sequence. Only an unreadable config file is an `Err`.
pub fn validate(path: &Path, omega: Option<&[f64]>) -> Result<ValidationReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(validate_text(&text, base, omega))
}

pub fn validate_text(text: &str, base: &Path, omega: Option<&[f64]>) -> ValidationReport {
    let mut checks = Vec::new();
    let config = match DatasetConfig::from_toml(text).and_then(|c| c.check().map(|_| c)) {
        Ok(c) => {
            checks.push(Check::new("config parses", 1, Vec::new()));
            c
        }
        Err(e) => {
            checks.push(Check::error("config parses", &e));
            return ValidationReport { checks };
        }
    };
    let resolve = |p: &Path| -> PathBuf { if p.is_absolute() { p.to_path_buf() } else { base.join(p) } };
    let n = config.nodes;
    for (q, file) in config.edges.iter().enumerate() {
        match parse_edge_file(&resolve(file), config.weight_transform()) {
            Ok(edges) => {
                checks.push(Check::new(format!("candidate {q}: edge file parses"), edges.len(), Vec::new()));
                edge_checks(q, n, config.transform, &edges, &mut checks);
            }
            Err(e) => checks.push(Check::error(format!("candidate {q}: edge file parses"), &e)),
        }
    }
    let r = config.candidates;
    table_checks("opinions", &resolve(&config.opinions), r, n, false, &mut checks);
    if let Some(s) = &config.stubbornness {
        let fallback = config.stubbornness_default.is_some();
        table_checks("stubbornness", &resolve(s), r, n, fallback, &mut checks);
    }
    if let Some(w) = omega {
        let failures = match check_omega(w, r) {
            Ok(()) => Vec::new(),
            Err(e) => vec![e.to_string()],
        };
        checks.push(Check::new("position weights in [0, 1] and non-increasing", w.len(), failures));
    }
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/running_example/config.toml")
    }

    #[test]
    fn running_example_passes() {
        let report = validate(&example(), Some(&[1.0, 0.5])).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn increasing_omega_fails() {
        let report = validate(&example(), Some(&[0.5, 1.0])).unwrap();
        let failed: Vec<_> = report.failed().collect();
        assert_eq!(failed.len(), 1);
        assert!(failed[0].name.contains("non-increasing"));
    }

    #[test]
    fn column_sum_failure_names_node() {
        let dir = tempfile::tempdir().unwrap();
        let src = example();
        let src_dir = src.parent().unwrap();
        for f in ["config.toml", "c2.tsv", "opinions.tsv", "stubbornness.tsv"] {
            fs::copy(src_dir.join(f), dir.path().join(f)).unwrap();
        }
        fs::write(dir.path().join("c1.tsv"), "0\t2\t0.5\n1\t2\t0.4\n2\t3\t1\n").unwrap();
        let report = validate(&dir.path().join("config.toml"), None).unwrap();
        let failed: Vec<_> = report.failed().collect();
        assert_eq!(failed.len(), 1, "{report}");
        assert_eq!(failed[0].failures, 1);
        assert!(failed[0].details[0].starts_with("node 2:"), "{report}");
        assert!(format!("{report}").contains("FAIL  candidate 0: incoming weights sum to 1"));
    }

    #[test]
    fn bad_rows_are_counted() {
        let base = example();
        let dir = base.parent().unwrap();
        let cfg = fs::read_to_string(&base).unwrap().replace("opinions.tsv", "missing.tsv");
        let report = validate_text(&cfg, dir, None);
        assert!(!report.passed());
        let tmp = tempfile::tempdir().unwrap();
        for f in ["config.toml", "c1.tsv", "c2.tsv", "stubbornness.tsv"] {
            fs::copy(dir.join(f), tmp.path().join(f)).unwrap();
        }
        fs::write(tmp.path().join("opinions.tsv"), "0\t0\t1.2\n0\t1\t0.5\n").unwrap();
        let report = validate(&tmp.path().join("config.toml"), None).unwrap();
        let failed: Vec<_> = report.failed().map(|c| (c.name.clone(), c.failures)).collect();
        assert_eq!(
            failed,
            vec![
                ("opinions: one row per candidate and node".to_string(), 6),
                ("opinions: values in [0, 1]".to_string(), 1),
            ]
        );
    }
}
