//! Ranked lists, final-stage interaction scoring and reciprocal rank fusion.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Product};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::text::tokenize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub product_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Descending score, then ascending id.
pub fn result_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Sorts `(id, score)` pairs by descending score with ascending-id ties and
/// keeps the first `n`, assigning ranks 1..=n.
pub fn top_n(scored: impl IntoIterator<Item = (String, f64)>, n: usize) -> Vec<RankedResult> {
    let mut v: Vec<(String, f64)> = scored.into_iter().collect();
    v.sort_by(result_order);
    v.truncate(n);
    v.into_iter()
        .enumerate()
        .map(|(i, (product_id, score))| RankedResult {
            product_id,
            score,
            rank: i + 1,
        })
        .collect()
}

/// Scores a (query, product) pair jointly; higher is more relevant.
pub trait InteractionScorer: Send + Sync {
    fn id(&self) -> &str;
    fn score(&self, query: &str, product: &Product) -> f64;
}

impl<T: InteractionScorer + ?Sized> InteractionScorer for Box<T> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn score(&self, query: &str, product: &Product) -> f64 {
        (**self).score(query, product)
    }
}

/// Deterministic stand-in for a cross-encoder:
/// `overlap_weight · F1(query tokens, product tokens) + title_weight · title coverage`.
///
/// F1 is computed over distinct tokens, with precision relative to the query
/// and recall relative to the product text (title, description, reviews).
/// Title coverage is the fraction of distinct query tokens present in the title.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapScorer {
    pub overlap_weight: f64,
    pub title_weight: f64,
}

impl Default for OverlapScorer {
    fn default() -> Self {
        OverlapScorer {
            overlap_weight: 0.7,
            title_weight: 0.3,
        }
    }
}

impl InteractionScorer for OverlapScorer {
    fn id(&self) -> &str {
        "overlap-f1"
    }

    fn score(&self, query: &str, product: &Product) -> f64 {
        let q: BTreeSet<String> = tokenize(query).into_iter().collect();
        if q.is_empty() {
            return 0.0;
        }
        let doc: BTreeSet<String> = tokenize(&product.full_text()).into_iter().collect();
        let title: BTreeSet<String> = tokenize(&product.title).into_iter().collect();
        let shared = q.intersection(&doc).count() as f64;
        let f1 = if shared == 0.0 {
            0.0
        } else {
            let precision = shared / q.len() as f64;
            let recall = shared / doc.len() as f64;
            2.0 * precision * recall / (precision + recall)
        };
        let coverage = q.intersection(&title).count() as f64 / q.len() as f64;
        self.overlap_weight * f1 + self.title_weight * coverage
    }
}

/// Scores every candidate with `scorer` and returns the top `n`.
pub fn rerank(
    scorer: &dyn InteractionScorer,
    query: &str,
    candidates: &[String],
    catalog: &Catalog,
    n: usize,
) -> Result<Vec<RankedResult>> {
    rerank_with(Execution::default(), scorer, query, candidates, catalog, n)
}

pub fn rerank_with(
    exec: Execution,
    scorer: &dyn InteractionScorer,
    query: &str,
    candidates: &[String],
    catalog: &Catalog,
    n: usize,
) -> Result<Vec<RankedResult>> {
    let products = candidates
        .iter()
        .map(|id| catalog.product(id))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    let unique: Vec<&Product> = products
        .into_iter()
        .filter(|p| seen.insert(p.id.as_str()))
        .collect();
    let scored = par::map(exec, &unique, |p| (p.id.clone(), scorer.score(query, p)));
    Ok(top_n(scored, n))
}

pub const DEFAULT_RRF_K: f64 = 60.0;

/// Reciprocal rank fusion: `fused(d) = Σ_lists 1 / (k + rank_d)`.
///
/// Contributions are summed in ascending rank order so the fused score of a
/// document does not depend on the order of `lists`.
pub fn rrf_fuse(lists: &[Vec<RankedResult>], k_rrf: f64, n: usize) -> Vec<RankedResult> {
    let mut ranks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for list in lists {
        for r in list {
            ranks.entry(r.product_id.as_str()).or_default().push(r.rank);
        }
    }
    top_n(
        ranks.into_iter().map(|(id, mut rs)| {
            rs.sort_unstable();
            let fused = rs.iter().map(|&r| 1.0 / (k_rrf + r as f64)).sum();
            (id.to_string(), fused)
        }),
        n,
    )
}

/// Request body for an external reranking service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerankRequest {
    pub query: String,
    pub passages: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub scores: Vec<f64>,
}

/// Transport for an external reranker (HTTP client, subprocess, ...).
pub trait RerankBackend: Send + Sync {
    fn rerank(&self, request: &RerankRequest) -> Result<RerankResponse>;
}

/// Adapts a [`RerankBackend`] to [`InteractionScorer`], one passage per call.
/// A failed or malformed response scores the pair as negative infinity so it
/// sinks to the bottom instead of aborting the query.
pub struct RemoteScorer<B> {
    id: String,
    backend: B,
}

impl<B: RerankBackend> RemoteScorer<B> {
    pub fn new(id: impl Into<String>, backend: B) -> Self {
        RemoteScorer {
            id: id.into(),
            backend,
        }
    }

    /// Scores a batch of passages, checking that the response length matches.
    pub fn score_batch(&self, query: &str, passages: Vec<String>) -> Result<Vec<f64>> {
        let want = passages.len();
        let resp = self.backend.rerank(&RerankRequest {
            query: query.to_string(),
            passages,
        })?;
        if resp.scores.len() != want {
            return Err(Error::Adapter(format!(
                "expected {want} scores, got {}",
                resp.scores.len()
            )));
        }
        if let Some(bad) = resp.scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Adapter(format!("non-finite score {bad}")));
        }
        Ok(resp.scores)
    }
}

impl<B: RerankBackend> InteractionScorer for RemoteScorer<B> {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, query: &str, product: &Product) -> f64 {
        self.score_batch(query, vec![product.full_text()])
            .map(|s| s[0])
            .unwrap_or(f64::NEG_INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::AttributeSchema;

    fn product(id: &str, title: &str) -> Product {
        Product {
            id: id.into(),
            title: title.into(),
            ..Default::default()
        }
    }

    fn list(ids: &[&str]) -> Vec<RankedResult> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| RankedResult {
                product_id: id.to_string(),
                score: 1.0 / (i + 1) as f64,
                rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn default_scorer_identity_and_disjoint() {
        let s = OverlapScorer::default();
        assert!((s.score("wooden train", &product("a", "Wooden Train")) - 1.0).abs() < 1e-12);
        assert_eq!(s.score("kite", &product("a", "wooden train")), 0.0);
    }

    #[test]
    fn default_scorer_hand_value() {
        // F1 = 2·(1·2/3)/(1 + 2/3) = 0.8; coverage 1; 0.7·0.8 + 0.3 = 0.86
        let s = OverlapScorer::default().score("red car", &product("a", "red car wash"));
        assert!((s - 0.86).abs() < 1e-12, "{s}");
    }

    #[test]
    fn rerank_ties_and_singletons() {
        let c = Catalog::from_products(
            [product("b", "red kite"), product("a", "red kite"), product("c", "blue")],
            AttributeSchema::default(),
        )
        .unwrap();
        let s = OverlapScorer::default();
        let r = rerank(&s, "red kite", &["c".into()], &c, 5).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].product_id.as_str(), r[0].rank), ("c", 1));
        let r = rerank(&s, "red kite", &["b".into(), "a".into(), "c".into()], &c, 2).unwrap();
        assert_eq!(r[0].product_id, "a");
        assert_eq!(r[1].product_id, "b");
        assert_eq!(r[0].score, r[1].score);
        assert!(matches!(
            rerank(&s, "x", &["zz".into()], &c, 1),
            Err(Error::UnknownProduct(_))
        ));
    }

    #[test]
    fn rrf_identity() {
        let a = list(&["p", "q", "r"]);
        let fused = rrf_fuse(std::slice::from_ref(&a), DEFAULT_RRF_K, 10);
        let ids: Vec<_> = fused.iter().map(|r| r.product_id.as_str()).collect();
        assert_eq!(ids, ["p", "q", "r"]);
    }

    #[test]
    fn rrf_symmetric_lists_tie_exactly() {
        let fused = rrf_fuse(&[list(&["x", "y"]), list(&["y", "x"])], 60.0, 10);
        assert_eq!(fused[0].score, fused[1].score);
        assert_eq!(fused[0].score, 1.0 / 61.0 + 1.0 / 62.0);
        assert_eq!(fused[0].product_id, "x");
        assert_eq!(fused[1].product_id, "y");
    }

    #[test]
    fn rrf_two_second_places_beat_one_first() {
        let fused = rrf_fuse(&[list(&["solo", "both"]), list(&["other", "both"])], 60.0, 10);
        assert_eq!(fused[0].product_id, "both");
        assert_eq!(fused[0].score, 2.0 / 62.0);
        let solo = fused.iter().find(|r| r.product_id == "solo").unwrap();
        assert_eq!(solo.score, 1.0 / 61.0);
    }

    struct Fixed(Vec<f64>);
    impl RerankBackend for Fixed {
        fn rerank(&self, _r: &RerankRequest) -> Result<RerankResponse> {
            Ok(RerankResponse {
                scores: self.0.clone(),
            })
        }
    }

    #[test]
    fn remote_scorer_validates_length() {
        let ok = RemoteScorer::new("fixed", Fixed(vec![0.5]));
        assert_eq!(ok.score("q", &product("a", "t")), 0.5);
        let bad = RemoteScorer::new("fixed", Fixed(vec![0.5, 0.1]));
        assert!(bad.score_batch("q", vec!["p".into()]).is_err());
        assert_eq!(bad.score("q", &product("a", "t")), f64::NEG_INFINITY);
    }
}
