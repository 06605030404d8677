//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, likelihood evaluation and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a mathematical domain constraint (non-positive
    /// duration, parameter outside its feasible set, non-binary indicator).
    #[error("domain error: {0}")]
    Domain(String),

    /// The model specification or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The data cannot support the requested computation.
    #[error("data error: {0}")]
    Data(String),

    /// A named column was not found where required.
    #[error("unknown column: {0}")]
    UnknownColumn(String),

    /// The optimizer failed to produce a converged estimate.
    #[error("convergence failure: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
