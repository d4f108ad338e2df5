use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("kernel needs at least 2 states, got {k}")]
    TooSmall { k: usize },
    #[error("matrix is not square: row {row} has {len} entries, expected {k}")]
    NotSquare { row: usize, len: usize, k: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, outside tolerance of 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },
    #[error("distribution sums to {sum}, outside tolerance of 1")]
    DistributionSum { sum: f64 },
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("an instance needs at least one kernel")]
    EmptyKernelList,
    #[error("kernel is not irreducible: state {unreachable} is not mutually reachable from state 0")]
    NotIrreducible { unreachable: usize },
    #[error("stationary mass at index {index} is zero")]
    ZeroStationaryMass { index: usize },
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigensolverFailure { sweeps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("instance file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ChainError>;
