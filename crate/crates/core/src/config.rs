//! Run configuration. Every section has defaults, so a partial JSON document
//! (or `{}`) is a valid configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::citations::RelevanceConfig;
use crate::error::{Error, Result};
use crate::topics::{LdaConfig, PreprocessOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub keywords: KeywordsConfig,
    pub citations: CitationsConfig,
    pub topics: TopicsConfig,
    pub geo: GeoConfig,
    pub complementarity: ComplementarityConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            keywords: KeywordsConfig::default(),
            citations: CitationsConfig::default(),
            topics: TopicsConfig::default(),
            geo: GeoConfig::default(),
            complementarity: ComplementarityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordsConfig {
    /// Community id → display label.
    pub labels: BTreeMap<usize, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CitationsConfig {
    pub relevance: RelevanceConfig,
    pub theta_w_grid: Vec<f64>,
    pub k_max_grid: Vec<usize>,
    /// Explicit `(theta_w, k_max)` instead of the automatic Pareto pick.
    pub choice: Option<(f64, usize)>,
    /// Let two-hop publications contribute to per-article profiles.
    pub include_control_group: bool,
    pub labels: BTreeMap<usize, String>,
}

impl Default for CitationsConfig {
    fn default() -> Self {
        Self {
            relevance: RelevanceConfig::default(),
            theta_w_grid: vec![1.0, 2.0, 3.0, 5.0, 10.0],
            k_max_grid: vec![20, 50, 100, 200, 500],
            choice: None,
            include_control_group: true,
            labels: BTreeMap::new(),
        }
    }
}

impl CitationsConfig {
    pub fn grid(&self) -> Vec<(f64, usize)> {
        self.theta_w_grid
            .iter()
            .flat_map(|&t| self.k_max_grid.iter().map(move |&k| (t, k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub language: String,
    pub candidates: Vec<usize>,
    pub replications: usize,
    pub holdout_fraction: f64,
    /// Sampler settings; `k` and `seed` are overridden per fit.
    pub lda: LdaConfig,
    pub preprocess: PreprocessOptions,
    pub top_words: usize,
    pub evolution_threshold: f64,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        Self {
            language: "fr".into(),
            candidates: vec![2, 5, 10, 20, 25, 27, 29, 31, 33, 35, 50, 100, 200],
            replications: 10,
            holdout_fraction: 0.1,
            lda: LdaConfig::default(),
            preprocess: PreprocessOptions::default(),
            top_words: 20,
            evolution_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoConfig {
    pub k: usize,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self { k: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComplementarityConfig {
    pub bootstrap_reps: usize,
    pub shuffle_fraction: f64,
    /// Explicit distance thresholds; default is evenly spaced percentiles.
    pub thresholds: Option<Vec<f64>>,
    pub threshold_count: usize,
}

impl Default for ComplementarityConfig {
    fn default() -> Self {
        Self {
            bootstrap_reps: 10_000,
            shuffle_fraction: 0.5,
            thresholds: None,
            threshold_count: 20,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.citations.relevance.validate()?;
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.citations.grid().is_empty() {
            return bad("citation filtering grid is empty");
        }
        if self.topics.candidates.is_empty() || self.topics.candidates.contains(&0) {
            return bad("topic candidates must be nonempty and positive");
        }
        if self.topics.replications < 1 {
            return bad("topic replications must be at least 1");
        }
        if self.topics.lda.iterations < self.topics.lda.burn_in {
            return bad("lda iterations below burn-in");
        }
        if self.geo.k < 1 {
            return bad("geo k must be at least 1");
        }
        if self.complementarity.bootstrap_reps < 1 {
            return bad("bootstrap_reps must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.complementarity.shuffle_fraction) {
            return bad("shuffle_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    /// Compact JSON with struct fields in declaration order and maps sorted.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
