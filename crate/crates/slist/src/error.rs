use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("log schema error: {0}")]
    Schema(String),

    #[error("corpus format error: {0}")]
    CorpusFormat(String),

    #[error("all events were filtered out; no sessions survive preprocessing")]
    EmptyCorpus,

    #[error("split leaves the training set empty")]
    EmptyTrainSplit,

    #[error("evaluation requires a non-empty test corpus")]
    EmptyTestCorpus,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric within tolerance (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("factorization failed: system is singular or indefinite (pivot {pivot:.3e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
}

impl Error {
    /// Coarse classification used by callers that map errors to exit codes:
    /// data-shaped problems vs. numerical failures.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NotSymmetric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
