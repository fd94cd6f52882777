use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by model construction, graph ingestion and the numerical
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex {0} has degree zero; restrict to the giant component first")]
    ZeroDegree(usize),

    #[error("only {distinct} distinct rows for {k} clusters")]
    DegenerateRows { distinct: usize, k: usize },

    #[error("giant component has {size} vertices, need at least {required}")]
    GiantTooSmall { size: usize, required: usize },

    #[error("no root of the distance equation below t = {limit}")]
    NoRoot { limit: f64 },

    #[error("eigengap is zero; the subspace bound does not apply")]
    ZeroGap,

    #[error("subspace bound does not apply: {0}")]
    BoundHypothesis(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
