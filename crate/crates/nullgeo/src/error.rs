//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry construction, parsing, and evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A point left the admissible coordinate domain (radial window or polar range).
    #[error("domain error: {0}")]
    Domain(String),

    /// Surface DSL parse failure with source location (1-based line/column).
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// The induced metric failed to be positive definite, or |H| fell below
    /// the degeneracy threshold where an H-gauge quantity was required.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// Two grid-backed objects with different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid argument to a numerical operation (bad index range, dimension, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Run configuration failed validation (unknown kind, missing field, ...).
    #[error("config error: {0}")]
    Config(String),

    /// A numerical subroutine failed to converge or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A check's mathematical hypotheses do not hold on this input (wrong
    /// spacetime class, surface outside the stated preconditions, cone or
    /// sign condition violated where the construction itself needs it).
    #[error("hypotheses failed: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }
}
