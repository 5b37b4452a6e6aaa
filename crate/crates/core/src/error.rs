use thiserror::Error;

/// Errors produced by the decomposition routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The rotational bootstrap needs both marginal bases to fit side by side
    /// in the ambient space.
    #[error(
        "bootstrap infeasible: marginal ranks {r1} + {r2} exceed ambient dimension {n}; \
         lower the marginal ranks"
    )]
    BootstrapInfeasible { r1: usize, r2: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
