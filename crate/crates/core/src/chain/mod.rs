//! Exact mathematics of finite Markov chains: kernels and their
//! composition, row margins and hard-max maps, stationary laws,
//! divergences, the pseudo-spectral gap and the local-global hard-max
//! consistency check.

mod consistency;
mod distribution;
pub mod eigen;
mod error;
mod instance;
pub mod io;
mod kernel;
mod margins;
mod spectral;
mod stationary;
mod divergence;

pub use consistency::{check_local_global_consistency, compose_maps, ConsistencyFailure, ConsistencyReport};
pub use distribution::Distribution;
pub use divergence::{chi_square, tv_distance};
pub use error::{ChainError, Result};
pub use instance::{Instance, Provenance};
pub use io::InstanceFile;
pub use kernel::{compose, Kernel};
pub use margins::{argmax_map, row_margins, ArgmaxMap, MarginReport};
pub use spectral::{
    pseudo_spectral_gap, spectral_report, time_reversal, PseudoSpectralGap, SpectralReport, SpectralWarning,
    DEFAULT_M_MAX,
};
pub use stationary::{check_irreducible, stationary};
