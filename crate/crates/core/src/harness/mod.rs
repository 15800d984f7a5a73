//! Experiment plumbing: dataset generation, validation, method dispatch, benchmark
//! tables and run manifests.

pub mod alloc;
pub mod bench;
pub mod gen;
pub mod manifest;
pub mod methods;
pub mod validate;

pub use bench::{run_bench, write_bench_csv, BenchRow, BenchSpec, BenchWriter};
pub use gen::{gen_synthetic, GenKind, GenSpec, StubbornnessOverride, SyntheticDataset};
pub use manifest::{dataset_hash, read_seeds, write_seeds, RunManifest};
pub use methods::{exact_prefix_scores, resolve_theta, run_method, Method, MethodParams, MethodRun, Provenance, ThetaChoice, ThetaMode};
pub use validate::{validate, ValidationReport};
