//! Flat key-value configuration. Every key has a default, so an empty file
//! is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogFormat, TextField};
use crate::error::{Error, Result};
use crate::filter::{FilterPolicy, MissingField};
use crate::lexical::Bm25Params;
use crate::par::Execution;
use crate::rank::OverlapScorer;
use crate::semantic::{EmbedMode, DEFAULT_DIMENSION, DEFAULT_HASH_SEED};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub catalog_path: Option<PathBuf>,
    pub catalog_format: CatalogFormat,
    /// `key=column` file, required for CSV catalogs.
    pub csv_mapping: Option<PathBuf>,

    /// Fields concatenated into the BM25 document.
    pub indexed_fields: Vec<TextField>,
    pub bm25_k1: f64,
    pub bm25_b: f64,

    /// Only `hashing` ships; external providers are wired in code.
    pub embedding_provider: String,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
    pub embedding_fields: Vec<TextField>,
    pub embedding_mode: EmbedMode,

    pub numeric_slack: f64,
    pub around_slack: f64,
    pub age_slack: f64,
    pub missing_field: MissingField,
    pub top_rated_threshold: f64,

    pub rrf_k: f64,
    /// Semantic shortlist reranked by the `rerank` strategy.
    pub rerank_shortlist: usize,
    /// Depth of each list fused by the `hybrid` strategy.
    pub hybrid_depth: usize,
    /// Cap on the filtered set passed from the semantic stage to reranking.
    pub qam_shortlist: usize,
    pub scorer_overlap_weight: f64,
    pub scorer_title_weight: f64,
    /// Search the full catalog when the filter leaves nothing.
    pub fallback_unfiltered: bool,

    pub result_size: usize,
    pub k_set: Vec<usize>,
    pub judge_min_overlap: usize,
    pub seed: u64,
    pub synthetic_products: usize,
    pub synthetic_queries: usize,
    pub execution: Execution,
}

impl Default for Config {
    fn default() -> Self {
        let policy = FilterPolicy::default();
        let bm25 = Bm25Params::default();
        let scorer = OverlapScorer::default();
        Config {
            catalog_path: None,
            catalog_format: CatalogFormat::Jsonl,
            csv_mapping: None,
            indexed_fields: vec![TextField::Title, TextField::Description],
            bm25_k1: bm25.k1,
            bm25_b: bm25.b,
            embedding_provider: "hashing".into(),
            embedding_dim: DEFAULT_DIMENSION,
            embedding_seed: DEFAULT_HASH_SEED,
            embedding_fields: TextField::ALL.to_vec(),
            embedding_mode: EmbedMode::Concatenated,
            numeric_slack: policy.numeric_slack,
            around_slack: policy.around_slack,
            age_slack: policy.age_slack,
            missing_field: policy.missing_field,
            top_rated_threshold: crate::query::DEFAULT_TOP_RATED_THRESHOLD,
            rrf_k: crate::rank::DEFAULT_RRF_K,
            rerank_shortlist: 50,
            hybrid_depth: 50,
            qam_shortlist: 50,
            scorer_overlap_weight: scorer.overlap_weight,
            scorer_title_weight: scorer.title_weight,
            fallback_unfiltered: false,
            result_size: 10,
            k_set: (1..=10).collect(),
            judge_min_overlap: 1,
            seed: 42,
            synthetic_products: 200,
            synthetic_queries: 50,
            execution: Execution::Parallel,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.policy().validate()?;
        self.bm25().validate()?;
        let positive = [
            ("embedding_dim", self.embedding_dim),
            ("rerank_shortlist", self.rerank_shortlist),
            ("hybrid_depth", self.hybrid_depth),
            ("qam_shortlist", self.qam_shortlist),
            ("result_size", self.result_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.embedding_provider != "hashing" {
            return Err(Error::Config(format!(
                "unknown embedding_provider `{}` (built-in: hashing)",
                self.embedding_provider
            )));
        }
        if self.indexed_fields.is_empty() || self.embedding_fields.is_empty() {
            return Err(Error::Config("indexed_fields and embedding_fields must be non-empty".into()));
        }
        if self.k_set.is_empty() || self.k_set.contains(&0) {
            return Err(Error::Config("k_set must be non-empty positive integers".into()));
        }
        if !(self.rrf_k.is_finite() && self.rrf_k >= 0.0) {
            return Err(Error::Config(format!("rrf_k = {} must be >= 0", self.rrf_k)));
        }
        if !(0.0..=5.0).contains(&self.top_rated_threshold) {
            return Err(Error::Config("top_rated_threshold must be in [0, 5]".into()));
        }
        for w in [self.scorer_overlap_weight, self.scorer_title_weight] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config("scorer weights must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> FilterPolicy {
        FilterPolicy {
            numeric_slack: self.numeric_slack,
            around_slack: self.around_slack,
            age_slack: self.age_slack,
            missing_field: self.missing_field,
        }
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    pub fn scorer(&self) -> OverlapScorer {
        OverlapScorer {
            overlap_weight: self.scorer_overlap_weight,
            title_weight: self.scorer_title_weight,
        }
    }
}
