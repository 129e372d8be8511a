//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate tweet id `{0}`")]
    DuplicateTweetId(String),

    #[error("unknown label `{label}` for user `{user_id}` (expected regular, suspended or deleted)")]
    UnknownLabel { user_id: String, label: String },

    #[error("duplicate user id `{0}` in labels")]
    DuplicateUser(String),

    #[error("no profile for user `{0}`")]
    MissingProfile(String),

    #[error("row sets differ: {0}")]
    RowMismatch(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numeric domain violation: {0}")]
    NumericDomain(String),

    #[error("class `{0}` has no samples")]
    EmptyClass(String),

    #[error("zero vector in cosine distance")]
    ZeroVector,

    #[error("class `{class}` has {size} samples, need more than k={k} for SMOTE")]
    InsufficientMinority { class: String, size: usize, k: usize },

    #[error("unknown feature set `{0}`")]
    UnknownFeatureSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
