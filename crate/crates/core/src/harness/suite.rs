use std::path::{Path, PathBuf};

use super::config::{InstanceSource, ModAddSpec, NoiseConfig, SweepConfig, SyntheticSpec};
use super::export::{write_noise_tables, write_sweep_tables, ExportFormat};
use super::noise::{noise_ablation, NoiseReport};
use super::sweep::{run_sweep, SweepResult};
use super::Result;
use crate::benchgen::Alignment;

/// Outputs of the default experiment suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub sweeps: Vec<SweepResult>,
    pub noise: NoiseReport,
}

/// Letter-rule task aligned and misaligned at `T = 2`, modular addition
/// with `M = 7` and four steps in both conditions, and the noise ablation
/// over `p in {0.9, 0.8, 0.7}`, all on the default grid and replicates.
pub fn run_default_suite(seed: u64) -> Result<SuiteResult> {
    let sources = [
        ("letters", InstanceSource::Synthetic(SyntheticSpec::new(Alignment::Same, 2))),
        ("letters", InstanceSource::Synthetic(SyntheticSpec::new(Alignment::Diff, 2))),
        ("modadd", InstanceSource::Modadd(ModAddSpec::new(7, vec![2, 2, 2, 2]))),
        ("modadd", InstanceSource::Modadd(ModAddSpec::new(7, vec![1, 2, 3, 5]))),
    ];
    let sweeps = sources
        .into_iter()
        .map(|(experiment, source)| {
            let mut config = SweepConfig::new(experiment, source);
            config.seed = seed;
            run_sweep(&config)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut noise = NoiseConfig::new(SyntheticSpec::new(Alignment::Same, 2), vec![0.9, 0.8, 0.7]);
    noise.seed = seed;
    Ok(SuiteResult { sweeps, noise: noise_ablation(&noise)? })
}

pub fn write_suite_tables(suite: &SuiteResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for sweep in &suite.sweeps {
        out.extend(write_sweep_tables(sweep, dir)?);
    }
    out.extend(write_noise_tables(&suite.noise, dir, &[ExportFormat::Table])?);
    Ok(out)
}
