use serde::{Deserialize, Serialize};

use super::config::{InstanceSource, ScalingConfig, SweepConfig, TheoryConfig};
use super::sweep::{run_sweep_on, SweepResult};
use super::{HarnessError, Metric, Result};
use crate::chain::InstanceFile;
use crate::estimators::EstimatorKind;

/// Log-log fit of `n*(tau)` against `T` for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub estimator: EstimatorKind,
    /// `n*(tau)` per entry of the `T` grid.
    pub n_star: Vec<Option<usize>>,
    pub defined_points: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Present for the family's CoT estimator when the fit exists.
    pub verdict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub experiment: String,
    pub family: String,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<usize>,
    pub tau: f64,
    pub metric: Metric,
    pub band: [f64; 2],
    pub fits: Vec<ScalingFit>,
    pub sweeps: Vec<SweepResult>,
}

impl ScalingReport {
    pub fn fit(&self, estimator: EstimatorKind) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.estimator == estimator)
    }
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

const MIN_DEFINED: usize = 3;

/// Sweeps the family at every `T` and fits `log n*(tau)` against `log T`.
///
/// Fails with `InsufficientDefinedPoints` when the grid has fewer than three
/// horizons or the verdict estimator reaches `tau` at fewer than three.
pub fn verify_scaling(config: &ScalingConfig) -> Result<ScalingReport> {
    if config.t_grid.len() < MIN_DEFINED {
        return Err(HarnessError::InsufficientDefinedPoints { defined: config.t_grid.len() });
    }
    if config.t_grid.windows(2).any(|w| w[0] >= w[1]) || config.t_grid[0] == 0 {
        return Err(HarnessError::InvalidConfig("T_grid must be positive and strictly increasing".into()));
    }
    let cot = config.family.cot_estimator();
    let estimators = if config.estimators.is_empty() { vec![cot] } else { config.estimators.clone() };
    let band = config.band.unwrap_or_else(|| config.family.default_band());

    let mut sweeps = Vec::with_capacity(config.t_grid.len());
    for &t in &config.t_grid {
        let instance = config.family.instance(t)?;
        let sweep_config = SweepConfig {
            experiment: config.experiment.clone(),
            condition: Some(format!("{}_T{t}", config.family.name())),
            instance: InstanceSource::Inline(InstanceFile::from_instance(&instance)),
            n_grid: config.n_grid.clone(),
            replicates: config.replicates,
            seed: config.seed,
            estimators: estimators.clone(),
            metric: config.metric,
            thresholds: vec![config.tau],
            undefined_policy: config.undefined_policy,
            theory: TheoryConfig::default(),
            base_dir: Default::default(),
        };
        sweeps.push(run_sweep_on(&sweep_config, &instance)?);
    }

    let fits: Vec<ScalingFit> = estimators
        .iter()
        .map(|&estimator| {
            let n_star: Vec<Option<usize>> = sweeps.iter().map(|s| s.n_star_for(estimator, config.tau)).collect();
            let points: Vec<(f64, f64)> = config
                .t_grid
                .iter()
                .zip(&n_star)
                .filter_map(|(&t, n)| n.map(|n| ((t as f64).ln(), (n as f64).ln())))
                .collect();
            let fit = if points.len() >= MIN_DEFINED { least_squares(&points) } else { None };
            let verdict = (estimator == cot)
                .then(|| fit.map(|(slope, _)| slope >= band[0] && slope <= band[1]))
                .flatten();
            ScalingFit {
                estimator,
                defined_points: points.len(),
                n_star,
                slope: fit.map(|f| f.0),
                intercept: fit.map(|f| f.1),
                verdict,
            }
        })
        .collect();

    if let Some(f) = fits.iter().find(|f| f.estimator == cot) {
        if f.defined_points < MIN_DEFINED {
            return Err(HarnessError::InsufficientDefinedPoints { defined: f.defined_points });
        }
    }
    Ok(ScalingReport {
        experiment: config.experiment.clone(),
        family: config.family.name().into(),
        t_grid: config.t_grid.clone(),
        tau: config.tau,
        metric: config.metric,
        band,
        fits,
        sweeps,
    })
}
