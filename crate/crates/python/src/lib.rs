//! Python bindings: datasets, diffusion, scores, seed selection and sample counts.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fjvote_core::diffusion::snapshot;
use fjvote_core::harness::{gen_synthetic, run_method, GenKind, GenSpec, MethodParams, ThetaChoice};
use fjvote_core::scores::{score_all, ScoreKind};
use fjvote_core::selection::minwin::min_win_select;
use fjvote_core::{fixtures, sketch, walks, CampaignState, Error, InfluenceGraph, ScoreSpec, SeedSet};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A graph with one campaign per candidate.
#[pyclass(frozen, module = "fjvote")]
struct Dataset {
    graph: InfluenceGraph,
    campaigns: Vec<CampaignState>,
    target: usize,
}

impl Dataset {
    fn spec(&self, kind: &str, target: Option<usize>, p: Option<usize>, omega: Option<Vec<f64>>) -> PyResult<ScoreSpec> {
        let kind: ScoreKind = kind.parse().map_err(py_err)?;
        let r = self.graph.candidate_count();
        let mut spec = ScoreSpec::of_kind(kind, target.unwrap_or(self.target), r);
        if let Some(p) = p {
            spec.p = p;
        }
        if let Some(w) = omega {
            spec.omega = w;
        }
        spec.validate(r).map_err(py_err)?;
        Ok(spec)
    }

    fn seed_set(&self, candidate: usize, seeds: Option<Vec<usize>>) -> PyResult<SeedSet> {
        SeedSet::new(candidate, seeds.unwrap_or_default()).map_err(py_err)
    }
}

#[pymethods]
impl Dataset {
    /// Loads a dataset from its `config.toml`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ds = fjvote_core::Dataset::load(&path).map_err(py_err)?;
        Ok(Dataset {
            target: ds.target(),
            graph: ds.graph,
            campaigns: ds.campaigns,
        })
    }

    /// The four-user, two-candidate example.
    #[staticmethod]
    fn running_example() -> Self {
        let (graph, campaigns) = fixtures::running_example();
        Dataset {
            graph,
            campaigns,
            target: 0,
        }
    }

    #[staticmethod]
    #[pyo3(signature = (nodes, attach=2, candidates=2, rng_seed=0))]
    fn scale_free(nodes: usize, attach: usize, candidates: usize, rng_seed: u64) -> PyResult<Self> {
        let data = gen_synthetic(&GenSpec {
            kind: GenKind::ScaleFree { attach },
            nodes,
            candidates,
            rng_seed,
            opinions: None,
            stubbornness: None,
        })
        .map_err(py_err)?;
        let (graph, campaigns) = data.build().map_err(py_err)?;
        Ok(Dataset {
            graph,
            campaigns,
            target: 0,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    #[getter]
    fn candidate_count(&self) -> usize {
        self.graph.candidate_count()
    }

    #[getter]
    fn target(&self) -> usize {
        self.target
    }

    /// Opinions of every candidate at `t`, one row per candidate, with `seeds`
    /// applied to the target.
    #[pyo3(signature = (t, seeds=None, target=None))]
    fn opinions(&self, t: usize, seeds: Option<Vec<usize>>, target: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
        let s = self.seed_set(target.unwrap_or(self.target), seeds)?;
        let snap = snapshot(&self.graph, &self.campaigns, &s, t).map_err(py_err)?;
        Ok(snap.rows().to_vec())
    }

    /// Every candidate's score at `t` with `seeds` applied to the target.
    #[pyo3(signature = (t, kind="cumulative", seeds=None, target=None, p=None, omega=None))]
    fn scores(
        &self,
        t: usize,
        kind: &str,
        seeds: Option<Vec<usize>>,
        target: Option<usize>,
        p: Option<usize>,
        omega: Option<Vec<f64>>,
    ) -> PyResult<Vec<f64>> {
        let spec = self.spec(kind, target, p, omega)?;
        let s = self.seed_set(spec.target, seeds)?;
        let snap = snapshot(&self.graph, &self.campaigns, &s, t).map_err(py_err)?;
        score_all(&snap, &spec).map_err(py_err)
    }

    /// The target's score at `t`.
    #[pyo3(signature = (t, kind="cumulative", seeds=None, target=None, p=None, omega=None))]
    fn score(
        &self,
        t: usize,
        kind: &str,
        seeds: Option<Vec<usize>>,
        target: Option<usize>,
        p: Option<usize>,
        omega: Option<Vec<f64>>,
    ) -> PyResult<f64> {
        let tgt = target.unwrap_or(self.target);
        Ok(self.scores(t, kind, seeds, Some(tgt), p, omega)?[tgt])
    }

    /// Runs a selection method (`dm`, `dm-celf`, `rw`, `rs`, `sandwich` or a baseline
    /// name) and returns a dict with `seeds`, `score`, `trace` and timings.
    #[pyo3(signature = (k, t=20, method="dm", kind="cumulative", rng_seed=0, theta=None, target=None))]
    #[allow(clippy::too_many_arguments)]
    fn select<'py>(
        &self,
        py: Python<'py>,
        k: usize,
        t: usize,
        method: &str,
        kind: &str,
        rng_seed: u64,
        theta: Option<usize>,
        target: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = self.spec(kind, target, None, None)?;
        let method = method.parse().map_err(py_err)?;
        let params = MethodParams {
            rng_seed,
            theta: theta.map_or(ThetaChoice::Auto, ThetaChoice::Fixed),
            ..MethodParams::default()
        };
        let run = py
            .detach(|| run_method(&self.graph, &self.campaigns, &spec, method, k, t, &params))
            .map_err(py_err)?;
        let s = self.seed_set(spec.target, Some(run.seeds.clone()))?;
        let snap = snapshot(&self.graph, &self.campaigns, &s, t).map_err(py_err)?;
        let value = score_all(&snap, &spec).map_err(py_err)?[spec.target];
        let out = PyDict::new(py);
        out.set_item("seeds", run.seeds)?;
        out.set_item("score", value)?;
        out.set_item("trace", run.method_trace)?;
        out.set_item("select_seconds", run.select_seconds)?;
        out.set_item("walkgen_seconds", run.walkgen_seconds)?;
        Ok(out)
    }

    /// Smallest budget with which the target strictly wins, and the seeds found;
    /// `(None, [])` when seeding every node still loses.
    #[pyo3(signature = (t, kind="plurality", target=None))]
    fn min_win(&self, t: usize, kind: &str, target: Option<usize>) -> PyResult<(Option<usize>, Vec<usize>)> {
        let spec = self.spec(kind, target, None, None)?;
        let r = min_win_select(&self.graph, &self.campaigns, &spec, t).map_err(py_err)?;
        Ok((r.k, r.seeds))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(nodes={}, candidates={}, target={})",
            self.graph.node_count(),
            self.graph.candidate_count(),
            self.target
        )
    }
}

/// Walks per node for the cumulative score.
#[pyfunction]
fn lambda_cumulative(delta: f64, rho: f64) -> PyResult<usize> {
    walks::lambda_cumulative(delta, rho).map_err(py_err)
}

/// Sketch count for the cumulative score.
#[pyfunction]
#[pyo3(signature = (n, k, opt_lb, eps=0.1, l=1.0))]
fn theta_cumulative(n: usize, k: usize, opt_lb: f64, eps: f64, l: f64) -> PyResult<usize> {
    sketch::theta_cumulative(n, k, opt_lb, eps, l).map_err(py_err)
}

/// Smallest sketch count for the rank-based scores; raises when none exists.
#[pyfunction]
#[pyo3(signature = (n, k, opt_lb, eps=0.1, l=1.0, rho=1.0))]
fn theta_scan_rank(n: usize, k: usize, opt_lb: f64, eps: f64, l: f64, rho: f64) -> PyResult<u64> {
    Ok(sketch::theta_scan_rank(n, k, 2, opt_lb, eps, l, rho).map_err(py_err)?.theta)
}

/// Smallest sketch count for Copeland; raises when none exists.
#[pyfunction]
#[pyo3(signature = (n, k, r, mu, l=1.0, rho=1.0))]
fn theta_scan_copeland(n: usize, k: usize, r: usize, mu: f64, l: f64, rho: f64) -> PyResult<u64> {
    Ok(sketch::theta_scan_copeland(n, k, r, mu, l, rho).map_err(py_err)?.theta)
}

/// Validates a dataset; returns `(passed, report)`.
#[pyfunction]
fn validate(path: PathBuf) -> PyResult<(bool, String)> {
    let report = fjvote_core::harness::validate(&path, None).map_err(py_err)?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
fn fjvote(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(lambda_cumulative, m)?)?;
    m.add_function(wrap_pyfunction!(theta_cumulative, m)?)?;
    m.add_function(wrap_pyfunction!(theta_scan_rank, m)?)?;
    m.add_function(wrap_pyfunction!(theta_scan_copeland, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
