//! TOML dataset configuration. Relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campaign::{load_campaigns, CampaignState, StubbornnessPolicy, StubbornnessSource};
use crate::error::{Error, Result};
use crate::graph::{load_graph, InfluenceGraph, Normalization, WeightTransform};

pub const DEFAULT_MU: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    #[default]
    RawCount,
    Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub candidates: usize,
    pub nodes: usize,
    #[serde(default)]
    pub target: usize,
    /// One edge file per candidate.
    pub edges: Vec<PathBuf>,
    pub opinions: PathBuf,
    #[serde(default)]
    pub stubbornness: Option<PathBuf>,
    /// Fallback such as `uniform:0.5` for stubbornness rows absent from the file.
    #[serde(default)]
    pub stubbornness_default: Option<String>,
    #[serde(default)]
    pub transform: TransformKind,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// When false, incoming weights must already sum to one.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_mu() -> f64 {
    DEFAULT_MU
}

fn default_true() -> bool {
    true
}

impl DatasetConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn weight_transform(&self) -> WeightTransform {
        match self.transform {
            TransformKind::RawCount => WeightTransform::RawCount { mu: self.mu },
            TransformKind::Weight => WeightTransform::Weight,
        }
    }

    pub fn normalization(&self) -> Normalization {
        if self.normalize {
            Normalization::Normalize
        } else {
            Normalization::Require
        }
    }

    pub fn stubbornness_policy(&self) -> Result<Option<StubbornnessPolicy>> {
        self.stubbornness_default
            .as_deref()
            .map(str::parse)
            .transpose()
    }

    /// Checks counts that do not require reading the data files.
    pub fn check(&self) -> Result<()> {
        if self.candidates == 0 {
            return Err(Error::Config("candidates must be at least 1".into()));
        }
        if self.edges.len() != self.candidates {
            return Err(Error::Config(format!(
                "{} edge files listed for {} candidates",
                self.edges.len(),
                self.candidates
            )));
        }
        if self.target >= self.candidates {
            return Err(Error::CandidateOutOfRange {
                candidate: self.target,
                r: self.candidates,
            });
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if self.stubbornness.is_none() && self.stubbornness_default.is_none() {
            return Err(Error::Config(
                "either stubbornness or stubbornness_default is required".into(),
            ));
        }
        self.stubbornness_policy()?;
        Ok(())
    }
}

/// A loaded dataset: graph plus one campaign per candidate, all at `t = 0`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub graph: InfluenceGraph,
    pub campaigns: Vec<CampaignState>,
    /// Raw text of the config file, hashed into run manifests.
    pub config_text: String,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let config = DatasetConfig::from_toml(text)?;
        config.check()?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let edge_files: Vec<PathBuf> = config.edges.iter().map(|p| resolve(p)).collect();
        let graph = load_graph(
            config.nodes,
            &edge_files,
            config.weight_transform(),
            config.normalization(),
        )?;
        let source = StubbornnessSource {
            file: config.stubbornness.as_deref().map(resolve),
            default: config.stubbornness_policy()?,
        };
        let campaigns = load_campaigns(&resolve(&config.opinions), &source, &graph)?;
        Ok(Dataset {
            config,
            graph,
            campaigns,
            config_text: text.to_string(),
        })
    }

    pub fn target(&self) -> usize {
        self.config.target
    }
}
