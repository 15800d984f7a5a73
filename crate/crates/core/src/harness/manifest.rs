//! Run manifests, dataset hashing, and the seed file format.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::DatasetConfig;
use crate::error::{Error, Result};
use crate::harness::methods::{Method, MethodRun, Provenance};
use crate::scores::ScoreSpec;
use crate::selection::sandwich::SandwichResult;

/// SHA-256 over the config text followed by every file it references, in the order
/// edges, opinions, stubbornness.
pub fn dataset_hash(config_path: &Path) -> Result<String> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let config = DatasetConfig::from_toml(&text)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let mut files: Vec<PathBuf> = config.edges.clone();
    files.push(config.opinions.clone());
    files.extend(config.stubbornness.clone());
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    for f in files {
        let path = if f.is_absolute() { f } else { base.join(f) };
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub method: Method,
    pub score: ScoreSpec,
    pub k: usize,
    pub t: usize,
    pub rng_seed: u64,
    pub provenance: Provenance,
    pub walkgen_seconds: f64,
    pub select_seconds: f64,
    /// Allocator high-water mark during the run, approximate.
    pub peak_mem_bytes: usize,
    pub seeds: Vec<usize>,
    /// Exact score of the empty set followed by every seed prefix.
    pub score_trace: Vec<f64>,
    /// The method's own objective per insertion; estimates for rw and rs.
    pub method_trace: Vec<f64>,
    pub score_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichResult>,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config_hash: String,
        spec: &ScoreSpec,
        k: usize,
        t: usize,
        rng_seed: u64,
        run: MethodRun,
        score_trace: Vec<f64>,
        peak_mem_bytes: usize,
    ) -> Self {
        RunManifest {
            config_hash,
            method: run.method,
            score: spec.clone(),
            k,
            t,
            rng_seed,
            provenance: run.provenance,
            walkgen_seconds: run.walkgen_seconds,
            select_seconds: run.select_seconds,
            peak_mem_bytes,
            seeds: run.seeds,
            score_value: *score_trace.last().expect("trace includes the empty set"),
            score_trace,
            method_trace: run.method_trace,
            sandwich: run.sandwich,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// `rank node score` lines, rank starting at 1, score being the exact score of the
/// prefix ending at that seed.
pub fn format_seeds(seeds: &[usize], prefix_scores: &[f64]) -> String {
    let mut text = String::from("# rank\tnode\tscore\n");
    for (i, &v) in seeds.iter().enumerate() {
        let score = prefix_scores.get(i + 1).copied().unwrap_or(f64::NAN);
        writeln!(text, "{}\t{v}\t{score}", i + 1).unwrap();
    }
    text
}

pub fn write_seeds(path: &Path, seeds: &[usize], prefix_scores: &[f64]) -> Result<()> {
    fs::write(path, format_seeds(seeds, prefix_scores)).map_err(|e| Error::io(path, e))
}

/// Node ids ordered by rank. Accepts `rank node [score]` lines or bare node ids.
pub fn parse_seeds(text: &str, path: &Path) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = crate::graph::strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer {s:?}")));
        match fields.len() {
            1 => rows.push((rows.len() + 1, parse(fields[0])?)),
            2 | 3 => rows.push((parse(fields[0])?, parse(fields[1])?)),
            n => return Err(err(format!("expected 1 to 3 fields, found {n}"))),
        }
    }
    rows.sort_by_key(|&(rank, _)| rank);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidArgument(format!("rank {} appears twice in {}", w[0].0, path.display())));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

pub fn read_seeds(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_seeds(&text, path)
}
