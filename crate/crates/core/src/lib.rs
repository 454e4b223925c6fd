//! Hybrid product search built around query attribute modeling.
//!
//! A free-text query is split into typed metadata constraints and a semantic
//! residual ([`query`]). The constraints prune the catalog ([`filter`]), the
//! residual drives embedding similarity over the survivors ([`semantic`]), and
//! an interaction scorer produces the final order ([`rank`]). [`pipeline`]
//! wires these stages together next to four baseline strategies (BM25,
//! dense, dense + rerank, reciprocal rank fusion) and [`evaluation`] measures
//! them with P@k and mAP@k.
//!
//! Data-parallel loops (filtering, brute-force scoring, per-query evaluation)
//! run on rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise; see [`par`].

pub mod catalog;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod lexical;
pub mod par;
pub mod pipeline;
pub mod query;
pub mod rank;
pub mod semantic;
pub mod text;

mod persist;

pub use catalog::{AttributeSchema, Catalog, FieldType, Product, Review};
pub use error::{Error, Result};
pub use filter::FilterPolicy;
pub use par::Execution;
pub use pipeline::{SearchEngine, StrategyId};
pub use query::{Constraint, ConstraintKind, DecomposedQuery};
pub use rank::RankedResult;
