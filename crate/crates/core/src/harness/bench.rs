//! Benchmark grid: methods x budgets x trials, each row re-scored exactly.

use std::io::Write;

use serde::Serialize;

use crate::campaign::CampaignState;
use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::harness::alloc;
use crate::harness::methods::{run_method, Method, MethodParams};
use crate::rng;
use crate::scores::ScoreSpec;
use crate::selection::exact_score;

pub const BENCH_HEADER: [&str; 7] = [
    "method",
    "k",
    "score_value",
    "select_seconds",
    "walkgen_seconds",
    "peak_mem_bytes",
    "trial",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub k: usize,
    pub score_value: f64,
    pub select_seconds: f64,
    pub walkgen_seconds: f64,
    pub peak_mem_bytes: usize,
    pub trial: usize,
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub methods: Vec<Method>,
    pub score: ScoreSpec,
    pub ks: Vec<usize>,
    pub horizon: usize,
    pub repeats: usize,
    pub params: MethodParams,
}

/// Seed of trial `trial`; trials are independent streams of the base seed.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    rng::stream_key(base, rng::TAG_TRIAL, trial as u64)
}

/// Runs the grid in method, k, trial order. `on_row` sees each row as soon as it is
/// scored, so long runs can stream to disk.
pub fn run_bench(
    graph: &InfluenceGraph,
    campaigns: &[CampaignState],
    spec: &BenchSpec,
    mut on_row: impl FnMut(&BenchRow) -> Result<()>,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &method in &spec.methods {
        for &k in &spec.ks {
            for trial in 0..spec.repeats.max(1) {
                let params = MethodParams {
                    rng_seed: trial_seed(spec.params.rng_seed, trial),
                    ..spec.params.clone()
                };
                let baseline = alloc::reset_peak();
                let run = run_method(graph, campaigns, &spec.score, method, k, spec.horizon, &params)?;
                let peak = alloc::peak_since(baseline, run.store_bytes);
                let score_value = exact_score(graph, campaigns, &spec.score, &run.seeds, spec.horizon)?;
                let row = BenchRow {
                    method: method.to_string(),
                    k,
                    score_value,
                    select_seconds: run.select_seconds,
                    walkgen_seconds: run.walkgen_seconds,
                    peak_mem_bytes: peak,
                    trial,
                };
                on_row(&row)?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// CSV writer that always emits the header, even for an empty table.
pub struct BenchWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> BenchWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(BENCH_HEADER).map_err(csv_error)?;
        Ok(BenchWriter { inner })
    }

    pub fn write(&mut self, row: &BenchRow) -> Result<()> {
        self.inner.serialize(row).map_err(csv_error)?;
        self.inner.flush().map_err(|e| Error::io("bench output", e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io("bench output", e))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("writing CSV: {e}"))
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = BenchWriter::new(out)?;
    for r in rows {
        w.write(r)?;
    }
    w.finish()
}
