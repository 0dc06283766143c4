use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("{needed} candidate bases exceed the cap of {cap}; raise the cap or use solve() instead of enumeration")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("unperturbed problem infeasible")]
    UnperturbedInfeasible,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
