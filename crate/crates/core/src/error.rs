use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("invalid weight set: {0}")]
    InvalidWeightSet(String),

    #[error("weight set of kind units is not materialized at n = {0}; use the certificate path")]
    NotMaterialized(u64),

    #[error("instance exceeds guard: {0}")]
    GuardExceeded(String),

    #[error("search budget of {budget} multisets exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),

    #[error("fallback search exhausted: {0}")]
    SearchExhausted(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}
