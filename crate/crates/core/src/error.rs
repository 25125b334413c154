//! Crate-wide error type.

/// Errors produced by graph construction, training, and analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("input contains no interactions")]
    NoInteractions,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("batch needs at least {min} distinct anchors, got {got}")]
    BatchTooSmall { min: usize, got: usize },

    #[error("sampling exceeded {cap} rejections for a single draw")]
    RejectionCapExceeded { cap: usize },

    #[error("empty stratum: {0}")]
    EmptyStratum(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
