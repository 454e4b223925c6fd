use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no valid records in {0}")]
    EmptyCatalog(String),

    #[error("query is empty")]
    EmptyQuery,

    #[error("unknown product id `{0}`")]
    UnknownProduct(String),

    #[error("unknown text field `{0}` (expected title, description or reviews)")]
    UnknownField(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("embedding provider mismatch: index built with `{index}`, query embedded with `{query}`")]
    ProviderMismatch { index: String, query: String },

    #[error("catalog version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },

    #[error("{artifact}: unsupported format version {found} (expected {expected})")]
    FormatVersion {
        artifact: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("external adapter returned an invalid response: {0}")]
    Adapter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
