use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("item label {label} is outside 1..={k}")]
    ItemOutOfRange { label: usize, k: usize },

    #[error("position {position} is out of range for a list of {len} items")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("not a permutation: {0}")]
    NotPermutation(String),

    /// A parameter outside the domain of a formula (e.g. a confidence level not in (0, 1)).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A Monte-Carlo estimate that has no defined value for the drawn sample.
    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
