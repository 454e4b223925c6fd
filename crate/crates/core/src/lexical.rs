//! Inverted index with Okapi BM25 scoring, the keyword baseline.
//!
//! ```text
//! score(d, q) = Σ_{t ∈ q} idf(t) · tf(t,d)·(k1 + 1) / (tf(t,d) + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5))
//! ```
//!
//! Query terms are deduplicated before summing. The `ln(1 + ·)` form keeps
//! every idf strictly positive, so a document scores 0 exactly when it shares
//! no term with the query.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TextField};
use crate::error::{Error, Result};
use crate::persist;
use crate::rank::{top_n, RankedResult};
use crate::text::{Tokenizer, TokenizerConfig};

pub const LEXICAL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::Config(format!("bm25 k1 = {} must be >= 0", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("bm25 b = {} must be in [0, 1]", self.b)));
        }
        Ok(())
    }
}

/// `ln(1 + (N − df + 0.5) / (df + 0.5))`
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Saturated, length-normalized term frequency.
pub fn tf_weight(tf: u32, doc_len: usize, avg_doc_len: f64, params: Bm25Params) -> f64 {
    let tf = f64::from(tf);
    let ratio = if avg_doc_len > 0.0 {
        doc_len as f64 / avg_doc_len
    } else {
        1.0
    };
    tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * ratio))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub id: String,
    pub tf: u32,
}

#[derive(Clone, Debug)]
pub struct InvertedIndex {
    catalog_version: String,
    fields: Vec<TextField>,
    tokenizer: Tokenizer,
    params: Bm25Params,
    doc_lengths: BTreeMap<String, usize>,
    avg_doc_length: f64,
    /// Postings per term, sorted by product id.
    postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format_version: u32,
    catalog_version: String,
    fields: Vec<TextField>,
    tokenizer: TokenizerConfig,
    params: Bm25Params,
    doc_count: usize,
    avg_doc_length: f64,
    doc_lengths: BTreeMap<String, usize>,
    postings: BTreeMap<String, Vec<(String, u32)>>,
}

impl InvertedIndex {
    pub fn build(
        catalog: &Catalog,
        fields: &[TextField],
        params: Bm25Params,
        tokenizer: TokenizerConfig,
    ) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Config("lexical index needs at least one field".into()));
        }
        if catalog.is_empty() {
            return Err(Error::EmptyCatalog("lexical index input".into()));
        }
        params.validate()?;
        let tokenizer = Tokenizer::new(tokenizer)?;
        let mut fields = fields.to_vec();
        fields.sort();
        fields.dedup();

        let mut doc_lengths = BTreeMap::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        // products() iterates in id order, so each postings list stays sorted.
        for p in catalog.products() {
            let tokens = tokenizer.tokenize(&p.text_of(&fields));
            doc_lengths.insert(p.id.clone(), tokens.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting {
                    id: p.id.clone(),
                    tf,
                });
            }
        }
        let total: usize = doc_lengths.values().sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(InvertedIndex {
            catalog_version: catalog.version().to_string(),
            fields,
            tokenizer,
            params,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    /// Builds over field names such as `"title"`, `"description"`, `"reviews"`.
    pub fn build_named(catalog: &Catalog, fields: &[&str], params: Bm25Params) -> Result<Self> {
        let fields = fields
            .iter()
            .map(|f| f.parse())
            .collect::<Result<Vec<TextField>>>()?;
        Self::build(catalog, &fields, params, TokenizerConfig::default())
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, id: &str) -> Option<usize> {
        self.doc_lengths.get(id).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn catalog_version(&self) -> &str {
        &self.catalog_version
    }

    pub fn fields(&self) -> &[TextField] {
        &self.fields
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokenizer.tokenize(text)
    }

    fn term_weight(&self, term: &str, tf: u32, doc_len: usize) -> f64 {
        idf(self.doc_count(), self.postings(term).len())
            * tf_weight(tf, doc_len, self.avg_doc_length, self.params)
    }

    /// BM25 score of one product for already-tokenized query terms.
    pub fn bm25_score(&self, query_tokens: &[String], product_id: &str) -> Result<f64> {
        let doc_len = self
            .doc_length(product_id)
            .ok_or_else(|| Error::UnknownProduct(product_id.to_string()))?;
        let mut terms: Vec<&String> = query_tokens.iter().collect();
        terms.sort();
        terms.dedup();
        let mut score = 0.0;
        for term in terms {
            let list = self.postings(term);
            if let Ok(i) = list.binary_search_by(|p| p.id.as_str().cmp(product_id)) {
                score += self.term_weight(term, list[i].tf, doc_len);
            }
        }
        Ok(score)
    }

    /// Top-`n` products by BM25, ties by ascending id. Zero scores are dropped.
    pub fn search(&self, query: &str, n: usize) -> Vec<RankedResult> {
        let mut terms = self.tokenize(query);
        terms.sort();
        terms.dedup();
        let mut acc: HashMap<&str, f64> = HashMap::new();
        // Terms are visited in sorted order so per-document sums are reproducible.
        for term in &terms {
            for p in self.postings(term) {
                let w = self.term_weight(term, p.tf, self.doc_lengths[&p.id]);
                *acc.entry(p.id.as_str()).or_insert(0.0) += w;
            }
        }
        top_n(
            acc.into_iter()
                .filter(|(_, s)| *s > 0.0)
                .map(|(id, s)| (id.to_string(), s)),
            n,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_json(
            path,
            &IndexFile {
                format_version: LEXICAL_FORMAT_VERSION,
                catalog_version: self.catalog_version.clone(),
                fields: self.fields.clone(),
                tokenizer: self.tokenizer.config().clone(),
                params: self.params,
                doc_count: self.doc_count(),
                avg_doc_length: self.avg_doc_length,
                doc_lengths: self.doc_lengths.clone(),
                postings: self
                    .postings
                    .iter()
                    .map(|(t, ps)| (t.clone(), ps.iter().map(|p| (p.id.clone(), p.tf)).collect()))
                    .collect(),
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: IndexFile = persist::read_json(path)?;
        persist::check_format("lexical index", f.format_version, LEXICAL_FORMAT_VERSION)?;
        if f.doc_count != f.doc_lengths.len() {
            return Err(Error::Config(format!(
                "{}: doc_count {} disagrees with {} document lengths",
                path.display(),
                f.doc_count,
                f.doc_lengths.len()
            )));
        }
        Ok(InvertedIndex {
            catalog_version: f.catalog_version,
            fields: f.fields,
            tokenizer: Tokenizer::new(f.tokenizer)?,
            params: f.params,
            doc_lengths: f.doc_lengths,
            avg_doc_length: f.avg_doc_length,
            postings: f
                .postings
                .into_iter()
                .map(|(t, ps)| (t, ps.into_iter().map(|(id, tf)| Posting { id, tf }).collect()))
                .collect(),
        })
    }
}
