use thiserror::Error;

/// Errors produced by the token-merging engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty attention row")]
    EmptyAttentionRow,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("nothing to merge")]
    NothingToMerge,

    #[error("candidate pool too small: need {needed} set-A candidates, have {available}")]
    CandidatePoolTooSmall { needed: usize, available: usize },

    #[error("merge contract violation: {0}")]
    MergeContractViolation(String),

    #[error("provenance is not a partition: {0}")]
    ProvenanceNotPartition(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad tensor file: {0}")]
    BadTensorFile(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
