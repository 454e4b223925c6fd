//! Embedding providers and exact (brute-force) cosine search.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hasher;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Product, TextField};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::persist;
use crate::rank::{top_n, RankedResult};
use crate::text::tokenize;

pub const VECTOR_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_DIMENSION: usize = 256;
/// Hash seed of the default embedder. Changing it changes every vector.
pub const DEFAULT_HASH_SEED: u64 = 0x51a3_0d5e_ed00_0001;
const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;

pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the model and its settings; recorded in every vector index.
    fn id(&self) -> &str;
    fn dimension(&self) -> usize;
    /// L2-normalized embedding, or the zero vector for text without tokens.
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Signed feature hashing over the default tokenizer's tokens.
///
/// Each token is hashed with 64-bit FNV-1a keyed by `offset_basis ^ seed`.
/// The hash modulo the dimension picks the bucket, its top bit picks the
/// sign (set = −1). Bucket sums are L2-normalized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashingEmbedder {
    dimension: usize,
    seed: u64,
    id: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(HashingEmbedder {
            dimension,
            seed,
            id: format!("hashing-d{dimension}-s{seed:016x}"),
        })
    }

    /// Raw signed bucket counts, before normalization.
    pub fn accumulate(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for token in tokenize(text) {
            let mut h = fnv::FnvHasher::with_key(FNV_OFFSET_BASIS ^ self.seed);
            h.write(token.as_bytes());
            let h = h.finish();
            let bucket = (h % self.dimension as u64) as usize;
            v[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        }
        v
    }

    pub fn embed_vec(&self, text: &str) -> Vec<f64> {
        let mut v = self.accumulate(text);
        normalize(&mut v);
        v
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIMENSION, DEFAULT_HASH_SEED).expect("nonzero dimension")
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.embed_vec(text))
    }
}

/// Default 256-bucket embedding.
pub fn embed_default(text: &str) -> Vec<f64> {
    HashingEmbedder::default().embed_vec(text)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales `v` to unit length in place; a zero vector is left as is.
pub fn normalize(v: &mut [f64]) {
    let n = l2_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// `a·b / (‖a‖‖b‖)`, or 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMode {
    /// One vector per product over the concatenated source fields.
    #[default]
    Concatenated,
    /// One vector for the non-review fields plus one per review; a product
    /// scores the maximum cosine over its vectors.
    PerReviewMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    format_version: u32,
    catalog_version: String,
    provider_id: String,
    dimension: usize,
    source_fields: Vec<TextField>,
    mode: EmbedMode,
    entries: BTreeMap<String, Vec<Vec<f64>>>,
}

impl VectorIndex {
    pub fn build(
        catalog: &Catalog,
        provider: &dyn EmbeddingProvider,
        fields: &[TextField],
        mode: EmbedMode,
        exec: Execution,
    ) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Config("vector index needs at least one field".into()));
        }
        let mut fields = fields.to_vec();
        fields.sort();
        fields.dedup();
        let products: Vec<&Product> = catalog.products().collect();
        let embedded = par::map(exec, &products, |p| {
            let texts = product_texts(p, &fields, mode);
            texts
                .iter()
                .map(|t| provider.embed(t))
                .collect::<Result<Vec<_>>>()
                .map(|vs| (p.id.clone(), vs))
        });
        let mut entries = BTreeMap::new();
        for item in embedded {
            let (id, vectors) = item?;
            for v in &vectors {
                if v.len() != provider.dimension() {
                    return Err(Error::DimensionMismatch {
                        left: v.len(),
                        right: provider.dimension(),
                    });
                }
            }
            entries.insert(id, vectors);
        }
        Ok(VectorIndex {
            format_version: VECTOR_FORMAT_VERSION,
            catalog_version: catalog.version().to_string(),
            provider_id: provider.id().to_string(),
            dimension: provider.dimension(),
            source_fields: fields,
            mode,
            entries,
        })
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn catalog_version(&self) -> &str {
        &self.catalog_version
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source_fields(&self) -> &[TextField] {
        &self.source_fields
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vectors(&self, id: &str) -> Option<&[Vec<f64>]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    /// Similarity of an already-embedded query to one product.
    pub fn similarity(&self, query: &[f64], id: &str) -> Result<f64> {
        let vs = self
            .vectors(id)
            .ok_or_else(|| Error::UnknownProduct(id.to_string()))?;
        let mut best = if vs.is_empty() { 0.0 } else { f64::NEG_INFINITY };
        for v in vs {
            best = best.max(cosine(query, v)?);
        }
        Ok(best)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let idx: VectorIndex = persist::read_json(path)?;
        persist::check_format("vector index", idx.format_version, VECTOR_FORMAT_VERSION)?;
        if let Some((id, _)) = idx
            .entries
            .iter()
            .find(|(_, vs)| vs.iter().any(|v| v.len() != idx.dimension))
        {
            return Err(Error::Config(format!(
                "{}: vector for `{id}` does not have dimension {}",
                path.display(),
                idx.dimension
            )));
        }
        Ok(idx)
    }
}

fn product_texts(p: &Product, fields: &[TextField], mode: EmbedMode) -> Vec<String> {
    match mode {
        EmbedMode::Concatenated => vec![p.text_of(fields)],
        EmbedMode::PerReviewMax => {
            let base: Vec<TextField> = fields
                .iter()
                .copied()
                .filter(|f| *f != TextField::Reviews)
                .collect();
            let mut out = vec![p.text_of(&base)];
            if fields.contains(&TextField::Reviews) {
                out.extend(p.reviews.iter().map(|r| r.text.clone()));
            }
            out
        }
    }
}

/// Top-`n` products by cosine to `query_text`, restricted to `candidates`
/// when given. Ties by ascending id.
pub fn search_semantic(
    index: &VectorIndex,
    provider: &dyn EmbeddingProvider,
    query_text: &str,
    n: usize,
    candidates: Option<&BTreeSet<String>>,
) -> Result<Vec<RankedResult>> {
    search_semantic_with(Execution::default(), index, provider, query_text, n, candidates)
}

pub fn search_semantic_with(
    exec: Execution,
    index: &VectorIndex,
    provider: &dyn EmbeddingProvider,
    query_text: &str,
    n: usize,
    candidates: Option<&BTreeSet<String>>,
) -> Result<Vec<RankedResult>> {
    if provider.id() != index.provider_id {
        return Err(Error::ProviderMismatch {
            index: index.provider_id.clone(),
            query: provider.id().to_string(),
        });
    }
    let q = provider.embed(query_text)?;
    let ids: Vec<&str> = match candidates {
        Some(c) => c.iter().map(String::as_str).collect(),
        None => index.entries.keys().map(String::as_str).collect(),
    };
    let scored = par::map(exec, &ids, |id| index.similarity(&q, id).map(|s| (id.to_string(), s)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(top_n(scored, n))
}

/// Request body for an external embedding service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Transport for an external embedding model.
pub trait EmbedBackend: Send + Sync {
    /// Returns the embedding dimension the service will produce.
    fn handshake(&self) -> Result<usize>;
    fn embed(&self, request: &EmbedRequest) -> Result<EmbedResponse>;
}

/// Adapts an [`EmbedBackend`] to [`EmbeddingProvider`], validating vector
/// count and dimension and normalizing each vector.
pub struct RemoteEmbedder<B> {
    id: String,
    dimension: usize,
    backend: B,
}

impl<B: EmbedBackend> RemoteEmbedder<B> {
    pub fn connect(id: impl Into<String>, backend: B) -> Result<Self> {
        let dimension = backend.handshake()?;
        if dimension == 0 {
            return Err(Error::Adapter("declared dimension 0".into()));
        }
        Ok(RemoteEmbedder {
            id: id.into(),
            dimension,
            backend,
        })
    }

    pub fn embed_batch(&self, texts: Vec<String>) -> Result<Vec<Vec<f64>>> {
        let want = texts.len();
        let resp = self.backend.embed(&EmbedRequest { texts })?;
        if resp.vectors.len() != want {
            return Err(Error::Adapter(format!(
                "expected {want} vectors, got {}",
                resp.vectors.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|mut v| {
                if v.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        left: v.len(),
                        right: self.dimension,
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Adapter("non-finite vector component".into()));
                }
                normalize(&mut v);
                Ok(v)
            })
            .collect()
    }
}

impl<B: EmbedBackend> EmbeddingProvider for RemoteEmbedder<B> {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if tokenize(text).is_empty() {
            return Ok(vec![0.0; self.dimension]);
        }
        Ok(self.embed_batch(vec![text.to_string()])?.remove(0))
    }
}
