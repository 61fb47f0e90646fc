//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by generators, solvers and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A requested allocation exceeds the configured memory budget.
    #[error("resource budget exceeded: {what} requires {required} elements, budget is {budget}")]
    ResourceBudget {
        what: &'static str,
        required: u64,
        budget: u64,
    },

    /// A solver produced a non-finite intermediate value (divergence diagnostic).
    #[error("non-finite value in {quantity} at iteration {iter}")]
    NonFinite { quantity: &'static str, iter: usize },

    /// An overlap was requested but every node is revealed.
    #[error("test overlap is undefined: all nodes are revealed")]
    EmptyTestSet,

    /// Problem size exceeds what the operation supports.
    #[error("{what}: size {size} exceeds the supported maximum {max}")]
    TooLarge {
        what: &'static str,
        size: usize,
        max: usize,
    },

    /// Malformed input file or configuration.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
