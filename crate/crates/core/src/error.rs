//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the judge-rl library.
#[derive(Debug, Error)]
pub enum Error {
    /// A transform index outside the supported set, or a non-bijective
    /// option permutation.
    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    /// An advantage estimator was handed a group it cannot standardize
    /// (too few members or an empty subgroup).
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    /// A caller broke an API contract (mismatched lengths, missing
    /// advantages, empty input where non-empty is required).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value appeared mid-computation. Carries the id of
    /// the offending rollout's sample when known.
    #[error("non-finite value in {what} (sample {sample_id})")]
    NonFinite { what: String, sample_id: String },

    /// Invalid configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
