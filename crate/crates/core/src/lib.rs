//! Seed selection for voting-based scores under Friedkin-Johnsen opinion diffusion.

// Index loops mirror the per-node recurrences; `!(x > 0.0)` rejects NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod scores;
pub mod selection;
pub mod sketch;
pub mod walks;

pub use campaign::{CampaignState, SeedSet, StubbornnessPolicy};
pub use config::{Dataset, DatasetConfig};
pub use error::{Error, Result};
pub use graph::{InfluenceGraph, Normalization, WeightTransform};
pub use scores::{OpinionSnapshot, ScoreKind, ScoreSpec};
