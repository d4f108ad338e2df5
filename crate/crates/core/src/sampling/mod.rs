//! Seed-reproducible context datasets and their count statistics.

mod counts;
mod dataset;
mod error;
pub mod io;

pub use counts::{count, count_cot, count_direct, CountTensor};
pub use dataset::{
    record_stream, sample_cot, sample_dataset, sample_direct, sample_trajectory, ContextDataset, CotDataset,
    DatasetMeta, DirectDataset, EndpointPair, Mode, Trajectory, TrajectorySampler,
};
pub use error::{Result, SamplingError};
