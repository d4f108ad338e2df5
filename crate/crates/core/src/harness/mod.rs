//! Experiment orchestration: seeded replicate sweeps over the context budget,
//! scaling fits, the noise ablation, table and figure export, prompt export
//! and the default experiment suite.

mod config;
mod export;
mod noise;
mod prompts;
mod scaling;
mod suite;
mod svg;
mod sweep;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchgen::BenchError;
use crate::bounds::BoundsError;
use crate::chain::ChainError;
use crate::estimators::{EstimatorError, EstimatorKind};
use crate::sampling::SamplingError;

pub use config::{
    load_toml, FreshSpec, InstanceSource, ModAddSpec, NoiseConfig, PromptConfig, ScalingConfig, ScalingFamily,
    SweepConfig, SyntheticSpec, TheoryConfig, DEFAULT_SEED,
};
pub use export::{
    export_sweep, read_accuracy_csv, read_delta_n_csv, read_n_star_csv, write_noise_tables, write_scaling_tables,
    write_sweep_figures, write_sweep_tables, ExportFormat, NStarRow, ACCURACY_HEADER, DELTA_N_HEADER, FIT_HEADER,
    NOISE_HEADER, N_STAR_HEADER, SCALING_HEADER,
};
pub use noise::{noise_ablation, NoiseReport, NoiseRow};
pub use prompts::{export_prompts, render_prompts, write_prompts_jsonl, PromptRecord, PromptTemplate};
pub use scaling::{least_squares, verify_scaling, ScalingFit, ScalingReport};
pub use suite::{run_default_suite, write_suite_tables, SuiteResult};
pub use svg::{LineChart, Series};
pub use sweep::{run_sweep, run_sweep_on, DeltaN, MonotonicityFlag, NStar, SweepPoint, SweepResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("estimator {estimator} cannot run on this instance: {reason}")]
    IncompatibleEstimator { estimator: EstimatorKind, reason: String },
    #[error("slope fit needs at least 3 defined points, found {defined}")]
    InsufficientDefinedPoints { defined: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("i/o failure on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed table: {0}")]
    Table(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// True for failures reading or writing files.
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Io { .. } | HarnessError::Table(_) => true,
            HarnessError::Chain(ChainError::Format(_)) => true,
            HarnessError::Sampling(SamplingError::Io(_)) => true,
            HarnessError::Estimator(EstimatorError::Io(_)) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Per-replicate score that is averaged over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `mu`-weighted fraction of correctly answered start states.
    #[default]
    QueryAccuracy,
    /// 1 when every row is answered correctly, else 0.
    AllRowsCorrect,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::QueryAccuracy => "query_accuracy",
            Metric::AllRowsCorrect => "all_rows_correct",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a key path by folding each
/// part through SplitMix64.
pub fn split_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of the dataset behind one `(estimator, n, replicate)` cell.
pub fn replicate_seed(master: u64, estimator: EstimatorKind, n: usize, replicate: usize) -> u64 {
    let id = match estimator {
        EstimatorKind::Direct => 1,
        EstimatorKind::CotHomogeneous => 2,
        EstimatorKind::CotHeterogeneous => 3,
    };
    split_seed(master, &[id, n as u64, replicate as u64])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_seed_separates_keys() {
        let a = replicate_seed(7, EstimatorKind::Direct, 8, 0);
        assert_eq!(a, replicate_seed(7, EstimatorKind::Direct, 8, 0));
        assert_ne!(a, replicate_seed(7, EstimatorKind::Direct, 8, 1));
        assert_ne!(a, replicate_seed(7, EstimatorKind::Direct, 12, 0));
        assert_ne!(a, replicate_seed(7, EstimatorKind::CotHomogeneous, 8, 0));
        assert_ne!(a, replicate_seed(8, EstimatorKind::Direct, 8, 0));
        assert_ne!(split_seed(1, &[2, 3]), split_seed(1, &[3, 2]));
    }
}
