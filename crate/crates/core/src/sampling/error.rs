use thiserror::Error;

use super::dataset::Mode;
use crate::chain::ChainError;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("operation needs a {expected} dataset, got {found}")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("a dataset needs at least one record")]
    EmptyDataset,
    #[error("dataset digest {found} does not match instance digest {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("record {record}: {reason}")]
    InvalidRecord { record: usize, reason: String },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SamplingError>;
