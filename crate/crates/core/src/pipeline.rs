//! The five retrieval strategies over one prepared catalog.
//!
//! `qam` runs the four-stage pipeline: decompose the query, filter the
//! catalog by the extracted constraints, shortlist the survivors by cosine
//! similarity to the semantic residual, then rerank the shortlist against the
//! raw query with the interaction scorer.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::filter::{explain_product, filter_catalog_with, FilterPolicy};
use crate::lexical::InvertedIndex;
use crate::par::Execution;
use crate::query::{decompose_guarded, Constraint, DecomposedQuery, Decomposer, DecompositionSource, RuleDecomposer};
use crate::rank::{rerank_with, rrf_fuse, InteractionScorer, RankedResult};
use crate::semantic::{search_semantic_with, EmbeddingProvider, HashingEmbedder, VectorIndex};
use crate::text::TokenizerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    Keyword,
    Semantic,
    Rerank,
    Hybrid,
    Qam,
}

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [
        StrategyId::Keyword,
        StrategyId::Semantic,
        StrategyId::Rerank,
        StrategyId::Hybrid,
        StrategyId::Qam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Keyword => "keyword",
            StrategyId::Semantic => "semantic",
            StrategyId::Rerank => "rerank",
            StrategyId::Hybrid => "hybrid",
            StrategyId::Qam => "qam",
        }
    }

    /// Row label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            StrategyId::Keyword => "Keyword Search",
            StrategyId::Semantic => "Semantic Search",
            StrategyId::Rerank => "Re-Ranking",
            StrategyId::Hybrid => "Hybrid Search",
            StrategyId::Qam => "QAM",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = StrategyId::ALL.iter().map(|x| x.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown strategy `{s}`; valid strategies: {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub result_size: usize,
    pub rerank_shortlist: usize,
    pub hybrid_depth: usize,
    pub qam_shortlist: usize,
    pub rrf_k: f64,
    pub fallback_unfiltered: bool,
    pub execution: Execution,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions::from(&Config::default())
    }
}

impl From<&Config> for EngineOptions {
    fn from(c: &Config) -> Self {
        EngineOptions {
            result_size: c.result_size,
            rerank_shortlist: c.rerank_shortlist,
            hybrid_depth: c.hybrid_depth,
            qam_shortlist: c.qam_shortlist,
            rrf_k: c.rrf_k,
            fallback_unfiltered: c.fallback_unfiltered,
            execution: c.execution,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub count: usize,
}

pub const FLAG_FILTER_EMPTY: &str = "filter_empty";
pub const FLAG_FALLBACK: &str = "fallback_unfiltered";
pub const FLAG_EXHAUSTED: &str = "candidates_exhausted";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub strategy: StrategyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecomposedQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposer: Option<DecompositionSource>,
    pub catalog_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered_size: Option<usize>,
    pub stages: Vec<StageCount>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl SearchTrace {
    fn new(strategy: StrategyId, catalog_size: usize) -> Self {
        SearchTrace {
            strategy,
            decomposition: None,
            decomposer: None,
            catalog_size,
            filtered_size: None,
            stages: Vec::new(),
            flags: Vec::new(),
        }
    }

    fn stage(&mut self, stage: &str, count: usize) {
        self.stages.push(StageCount {
            stage: stage.to_string(),
            count,
        });
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub results: Vec<RankedResult>,
    pub trace: SearchTrace,
}

/// Decomposition and stage sizes for a query, without final ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub decomposition: DecomposedQuery,
    pub decomposer: DecompositionSource,
    pub catalog_size: usize,
    pub filtered_size: usize,
    pub stages: Vec<StageCount>,
}

/// One line of a run file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub strategy: StrategyId,
    pub results: Vec<RankedResult>,
    pub trace: SearchTrace,
}

/// Immutable search state: catalog, both indexes and the stage components.
pub struct SearchEngine {
    catalog: Catalog,
    lexical: InvertedIndex,
    vectors: VectorIndex,
    provider: Box<dyn EmbeddingProvider>,
    rules: RuleDecomposer,
    external: Option<Box<dyn Decomposer>>,
    scorer: Box<dyn InteractionScorer>,
    policy: FilterPolicy,
    options: EngineOptions,
}

impl fmt::Debug for SearchEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchEngine")
            .field("catalog_version", &self.catalog.version())
            .field("products", &self.catalog.len())
            .field("provider", &self.provider.id())
            .field("scorer", &self.scorer.id())
            .field("policy", &self.policy)
            .field("options", &self.options)
            .finish()
    }
}

impl SearchEngine {
    /// Assembles an engine from prebuilt parts, checking that both indexes
    /// were built from this catalog and the vectors from this provider.
    pub fn new(
        catalog: Catalog,
        lexical: InvertedIndex,
        vectors: VectorIndex,
        provider: Box<dyn EmbeddingProvider>,
        scorer: Box<dyn InteractionScorer>,
        policy: FilterPolicy,
        options: EngineOptions,
    ) -> Result<Self> {
        for found in [lexical.catalog_version(), vectors.catalog_version()] {
            if found != catalog.version() {
                return Err(Error::VersionMismatch {
                    expected: catalog.version().to_string(),
                    found: found.to_string(),
                });
            }
        }
        if vectors.provider_id() != provider.id() {
            return Err(Error::ProviderMismatch {
                index: vectors.provider_id().to_string(),
                query: provider.id().to_string(),
            });
        }
        policy.validate()?;
        if options.result_size == 0
            || options.rerank_shortlist == 0
            || options.hybrid_depth == 0
            || options.qam_shortlist == 0
        {
            return Err(Error::Config("result and shortlist sizes must be at least 1".into()));
        }
        let rules = RuleDecomposer::for_catalog(&catalog);
        Ok(SearchEngine {
            catalog,
            lexical,
            vectors,
            provider,
            rules,
            external: None,
            scorer,
            policy,
            options,
        })
    }

    /// Builds both indexes and the default components from `config`.
    pub fn build(catalog: Catalog, config: &Config) -> Result<Self> {
        config.validate()?;
        let provider = HashingEmbedder::new(config.embedding_dim, config.embedding_seed)?;
        let lexical = InvertedIndex::build(
            &catalog,
            &config.indexed_fields,
            config.bm25(),
            TokenizerConfig::default(),
        )?;
        let vectors = VectorIndex::build(
            &catalog,
            &provider,
            &config.embedding_fields,
            config.embedding_mode,
            config.execution,
        )?;
        let engine = SearchEngine::new(
            catalog,
            lexical,
            vectors,
            Box::new(provider),
            Box::new(config.scorer()),
            config.policy(),
            EngineOptions::from(config),
        )?;
        Ok(engine.with_top_rated_threshold(config.top_rated_threshold))
    }

    pub fn with_external_decomposer(mut self, d: Box<dyn Decomposer>) -> Self {
        self.external = Some(d);
        self
    }

    pub fn with_top_rated_threshold(mut self, t: f64) -> Self {
        self.rules = self.rules.with_top_rated_threshold(t);
        self
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn lexical(&self) -> &InvertedIndex {
        &self.lexical
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.vectors
    }

    pub fn policy(&self) -> &FilterPolicy {
        &self.policy
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn rules(&self) -> &RuleDecomposer {
        &self.rules
    }

    /// Decomposes with the external decomposer when configured, otherwise
    /// (or on invalid output) with the rule grammar.
    pub fn decompose(&self, query: &str) -> Result<(DecomposedQuery, DecompositionSource)> {
        decompose_guarded(self.external.as_deref(), &self.rules, query)
    }

    pub fn filter(&self, constraints: &[Constraint]) -> BTreeSet<String> {
        filter_catalog_with(self.options.execution, &self.catalog, constraints, &self.policy)
    }

    fn semantic(
        &self,
        text: &str,
        n: usize,
        candidates: Option<&BTreeSet<String>>,
    ) -> Result<Vec<RankedResult>> {
        search_semantic_with(
            self.options.execution,
            &self.vectors,
            self.provider.as_ref(),
            text,
            n,
            candidates,
        )
    }

    fn rerank(&self, query: &str, shortlist: &[RankedResult], n: usize) -> Result<Vec<RankedResult>> {
        let ids: Vec<String> = shortlist.iter().map(|r| r.product_id.clone()).collect();
        rerank_with(
            self.options.execution,
            self.scorer.as_ref(),
            query,
            &ids,
            &self.catalog,
            n,
        )
    }

    pub fn search(&self, strategy: StrategyId, query: &str, n: usize) -> Result<SearchOutcome> {
        if query.trim().is_empty() {
            return Err(Error::EmptyQuery);
        }
        if n == 0 {
            return Err(Error::InvalidArgument("result size must be at least 1".into()));
        }
        let opts = &self.options;
        let mut trace = SearchTrace::new(strategy, self.catalog.len());
        // Number of candidates the final stage could draw from.
        let pool;
        let results = match strategy {
            StrategyId::Keyword => {
                let r = self.lexical.search(query, n);
                pool = r.len();
                trace.stage("keyword", r.len());
                r
            }
            StrategyId::Semantic => {
                let r = self.semantic(query, n, None)?;
                pool = r.len();
                trace.stage("semantic", r.len());
                r
            }
            StrategyId::Rerank => {
                let shortlist = self.semantic(query, opts.rerank_shortlist, None)?;
                trace.stage("semantic_shortlist", shortlist.len());
                pool = shortlist.len();
                let r = self.rerank(query, &shortlist, n)?;
                trace.stage("rerank", r.len());
                r
            }
            StrategyId::Hybrid => {
                let kw = self.lexical.search(query, opts.hybrid_depth);
                let sem = self.semantic(query, opts.hybrid_depth, None)?;
                trace.stage("keyword", kw.len());
                trace.stage("semantic", sem.len());
                let r = rrf_fuse(&[kw, sem], opts.rrf_k, usize::MAX);
                pool = r.len();
                trace.stage("fused", r.len());
                r.into_iter().take(n).collect()
            }
            StrategyId::Qam => {
                let (d, source) = self.decompose(query)?;
                let mut filtered = self.filter(&d.constraints);
                trace.stage("filter", filtered.len());
                trace.filtered_size = Some(filtered.len());
                if filtered.is_empty() {
                    trace.flags.push(FLAG_FILTER_EMPTY.into());
                    if opts.fallback_unfiltered {
                        trace.flags.push(FLAG_FALLBACK.into());
                        filtered = self.catalog.ids().map(str::to_string).collect();
                    }
                }
                let results = if filtered.is_empty() {
                    pool = 0;
                    Vec::new()
                } else {
                    let width = opts.qam_shortlist.min(filtered.len());
                    let shortlist = self.semantic(&d.semantic_residual, width, Some(&filtered))?;
                    trace.stage("semantic_shortlist", shortlist.len());
                    pool = shortlist.len();
                    let r = self.rerank(query, &shortlist, n)?;
                    trace.stage("rerank", r.len());
                    r
                };
                trace.decomposition = Some(d);
                trace.decomposer = Some(source);
                results
            }
        };
        if results.len() < n && pool < n {
            trace.flags.push(FLAG_EXHAUSTED.into());
        }
        Ok(SearchOutcome { results, trace })
    }

    /// Decomposition plus filter and shortlist sizes for `query`.
    pub fn explain(&self, query: &str) -> Result<Explanation> {
        let (decomposition, decomposer) = self.decompose(query)?;
        let filtered = self.filter(&decomposition.constraints);
        let shortlist = self.options.qam_shortlist.min(filtered.len());
        Ok(Explanation {
            catalog_size: self.catalog.len(),
            filtered_size: filtered.len(),
            stages: vec![
                StageCount {
                    stage: "catalog".into(),
                    count: self.catalog.len(),
                },
                StageCount {
                    stage: "filter".into(),
                    count: filtered.len(),
                },
                StageCount {
                    stage: "semantic_shortlist".into(),
                    count: shortlist,
                },
            ],
            decomposition,
            decomposer,
        })
    }

    /// Per-constraint pass/fail of one product against a query's constraints.
    pub fn explain_product(&self, query: &str, product_id: &str) -> Result<Vec<(Constraint, bool)>> {
        let (d, _) = self.decompose(query)?;
        let p = self.catalog.product(product_id)?;
        Ok(explain_product(p, &d.constraints, &self.policy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AttributeSchema, Product};

    fn dress(id: &str, color: &str, brand: &str, price: f64) -> Product {
        Product {
            id: id.into(),
            title: format!("long {color} dress"),
            description: format!("An elegant dress by {brand}"),
            brand: Some(brand.into()),
            color: Some(color.into()),
            price: Some(price),
            ..Default::default()
        }
    }

    fn engine() -> SearchEngine {
        let catalog = Catalog::from_products(
            [
                dress("d1", "black", "zara", 95.0),
                dress("d2", "red", "zara", 60.0),
                dress("d3", "black", "mango", 80.0),
                dress("d4", "black", "zara", 300.0),
                dress("d5", "blue", "h&m", 20.0),
            ],
            AttributeSchema::default(),
        )
        .unwrap();
        SearchEngine::build(catalog, &Config::default()).unwrap()
    }

    const WORKED: &str = "A long black dress from Zara under $100";

    #[test]
    fn qam_worked_query_singleton() {
        let e = engine();
        let out = e.search(StrategyId::Qam, WORKED, 10).unwrap();
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].product_id, "d1");
        assert_eq!(out.trace.filtered_size, Some(1));
        assert!(out.trace.has_flag(FLAG_EXHAUSTED));
    }

    #[test]
    fn qam_empty_filter_is_not_an_error() {
        let e = engine();
        let out = e.search(StrategyId::Qam, "green dress under $5", 10).unwrap();
        assert!(out.results.is_empty());
        assert!(out.trace.has_flag(FLAG_FILTER_EMPTY));

        let mut opts = e.options().clone();
        opts.fallback_unfiltered = true;
        let e = e.with_options(opts);
        let out = e.search(StrategyId::Qam, "green dress under $5", 10).unwrap();
        assert!(!out.results.is_empty());
        assert!(out.trace.has_flag(FLAG_FALLBACK));
    }

    #[test]
    fn constraint_free_qam_equals_rerank() {
        let e = engine();
        let q = "elegant long dress";
        let qam = e.search(StrategyId::Qam, q, 3).unwrap();
        let rr = e.search(StrategyId::Rerank, q, 3).unwrap();
        assert_eq!(qam.results, rr.results);
        assert_eq!(qam.trace.filtered_size, Some(5));
    }

    #[test]
    fn explain_reports_constraints_and_sizes() {
        let e = engine();
        let x = e.explain(WORKED).unwrap();
        let fields: Vec<_> = x.decomposition.constraints.iter().map(|c| c.field.as_str()).collect();
        assert_eq!(fields, ["color", "brand", "price"]);
        assert_eq!(x.filtered_size, 1);
        let x = e.explain("under $100").unwrap();
        assert_eq!(x.decomposition.constraints, vec![Constraint::at_most("price", 100.0)]);
        let x = e.explain("dress").unwrap();
        assert_eq!(x.filtered_size, x.catalog_size);
        let per = e.explain_product(WORKED, "d4").unwrap();
        assert_eq!(per.iter().map(|(_, ok)| *ok).collect::<Vec<_>>(), [true, true, false]);
    }

    #[test]
    fn every_strategy_respects_n_and_is_repeatable() {
        let e = engine();
        for s in StrategyId::ALL {
            let a = e.search(s, "black dress", 2).unwrap();
            assert!(a.results.len() <= 2);
            assert_eq!(a, e.search(s, "black dress", 2).unwrap());
        }
        assert!(matches!(e.search(StrategyId::Keyword, "  ", 2), Err(Error::EmptyQuery)));
        assert!(e.search(StrategyId::Keyword, "dress", 0).is_err());
    }

    #[test]
    fn strategy_names() {
        assert_eq!("QAM".parse::<StrategyId>().unwrap(), StrategyId::Qam);
        let err = "smart".parse::<StrategyId>().unwrap_err().to_string();
        for s in StrategyId::ALL {
            assert!(err.contains(s.as_str()));
        }
    }

    #[test]
    fn mismatched_indexes_are_rejected() {
        let e = engine();
        let other = Catalog::from_products(
            [dress("z", "red", "zara", 1.0)],
            AttributeSchema::default(),
        )
        .unwrap();
        let err = SearchEngine::new(
            other,
            e.lexical().clone(),
            e.vectors().clone(),
            Box::new(HashingEmbedder::default()),
            Box::new(crate::rank::OverlapScorer::default()),
            FilterPolicy::default(),
            EngineOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::VersionMismatch { .. }));
    }
}
