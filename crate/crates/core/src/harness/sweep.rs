use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SweepConfig, TheoryConfig};
use super::{replicate_seed, HarnessError, Metric, Result};
use crate::bounds::{compute_profile, BoundReport, StructuralProfile, ViolationTag};
use crate::chain::{argmax_map, Instance};
use crate::estimators::{
    direct_from_counts, cot_heterogeneous_from_counts, cot_homogeneous_from_counts, evaluate_against, EstimatorKind,
    PredictionMap, UndefinedPolicy,
};
use crate::sampling::{count_cot, count_direct, sample_cot, sample_direct};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    /// Sample standard deviation over replicates divided by `sqrt(replicates)`.
    pub se: f64,
}

/// Least grid `n` whose mean metric reaches `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    pub estimator: EstimatorKind,
    pub tau: f64,
    pub n_star: Option<usize>,
}

/// `n_cot(tau) - n_direct(tau)`, grid-resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaN {
    pub estimator: EstimatorKind,
    pub tau: f64,
    pub n_cot: Option<usize>,
    pub n_direct: Option<usize>,
    pub delta_n: Option<i64>,
}

/// A drop of the mean curve by more than two combined standard errors
/// between consecutive grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityFlag {
    pub estimator: EstimatorKind,
    pub n_from: usize,
    pub n_to: usize,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    pub condition: String,
    pub metric: Metric,
    pub seed: u64,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub n_star: Vec<NStar>,
    pub delta_n: Vec<DeltaN>,
    pub profile: StructuralProfile,
    pub violations: Vec<ViolationTag>,
    /// One report per threshold, at `delta = 1 - tau`.
    pub bounds: Vec<BoundReport>,
    pub monotonicity_flags: Vec<MonotonicityFlag>,
}

impl SweepResult {
    pub fn estimators(&self) -> Vec<EstimatorKind> {
        let mut out: Vec<EstimatorKind> = Vec::new();
        for p in &self.points {
            if !out.contains(&p.estimator) {
                out.push(p.estimator);
            }
        }
        out
    }

    pub fn curve(&self, estimator: EstimatorKind) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.estimator == estimator).collect()
    }

    pub fn n_star_for(&self, estimator: EstimatorKind, tau: f64) -> Option<usize> {
        self.n_star.iter().find(|r| r.estimator == estimator && r.tau == tau).and_then(|r| r.n_star)
    }

    pub fn delta_n_for(&self, estimator: EstimatorKind, tau: f64) -> Option<&DeltaN> {
        self.delta_n.iter().find(|r| r.estimator == estimator && r.tau == tau)
    }

    /// The CoT estimator in this result, if any.
    pub fn cot_estimator(&self) -> Option<EstimatorKind> {
        self.estimators().into_iter().find(|&e| e != EstimatorKind::Direct)
    }
}

fn validate(config: &SweepConfig) -> Result<()> {
    if config.replicates == 0 {
        return Err(HarnessError::InvalidConfig("replicates must be at least 1".into()));
    }
    if config.n_grid.is_empty() || config.n_grid[0] == 0 {
        return Err(HarnessError::InvalidConfig("n_grid must be non-empty and positive".into()));
    }
    if config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidConfig("n_grid must be strictly increasing".into()));
    }
    if let Some(t) = config.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(HarnessError::InvalidConfig(format!("threshold {t} must lie in (0, 1]")));
    }
    Ok(())
}

/// The estimators a config runs on `instance`.
pub(crate) fn resolve_estimators(config: &SweepConfig, instance: &Instance<f64>) -> Result<Vec<EstimatorKind>> {
    let estimators = if config.estimators.is_empty() {
        let cot =
            if instance.is_homogeneous() { EstimatorKind::CotHomogeneous } else { EstimatorKind::CotHeterogeneous };
        vec![EstimatorKind::Direct, cot]
    } else {
        config.estimators.clone()
    };
    if estimators.contains(&EstimatorKind::CotHomogeneous) && !instance.is_homogeneous() {
        return Err(HarnessError::IncompatibleEstimator {
            estimator: EstimatorKind::CotHomogeneous,
            reason: "the instance has distinct per-step kernels".into(),
        });
    }
    Ok(estimators)
}

struct Truth<'a> {
    instance: &'a Instance<f64>,
    map: Vec<usize>,
    policy: UndefinedPolicy,
    metric: Metric,
}

impl Truth<'_> {
    fn score(&self, estimator: EstimatorKind, n: usize, seed: u64) -> Result<f64> {
        let prediction: PredictionMap = match estimator {
            EstimatorKind::Direct => direct_from_counts(&count_direct(&sample_direct(self.instance, n, seed)?)),
            EstimatorKind::CotHomogeneous => {
                cot_homogeneous_from_counts(&count_cot(&sample_cot(self.instance, n, seed)?))?
            }
            EstimatorKind::CotHeterogeneous => {
                cot_heterogeneous_from_counts(&count_cot(&sample_cot(self.instance, n, seed)?))?
            }
        };
        let eval = evaluate_against(&prediction, &self.map, self.instance.mu().weights(), self.policy)?;
        Ok(match self.metric {
            Metric::QueryAccuracy => eval.query_accuracy,
            Metric::AllRowsCorrect => f64::from(u8::from(eval.all_rows_correct)),
        })
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Builds the configured instance and sweeps it.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let instance = config.instance.build(&config.base_dir)?;
    run_sweep_on(config, &instance)
}

/// Sweeps a prebuilt instance; `config.instance` only supplies the label.
///
/// Every `(estimator, n, replicate)` cell draws a fresh dataset from its own
/// split seed, so the result does not depend on scheduling.
pub fn run_sweep_on(config: &SweepConfig, instance: &Instance<f64>) -> Result<SweepResult> {
    validate(config)?;
    let estimators = resolve_estimators(config, instance)?;
    let truth = Truth {
        instance,
        map: argmax_map(&instance.end_to_end()).map,
        policy: config.undefined_policy,
        metric: config.metric,
    };

    let cells: Vec<(EstimatorKind, usize)> =
        estimators.iter().flat_map(|&e| config.n_grid.iter().map(move |&n| (e, n))).collect();
    let scores: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(e, n)| {
            (0..config.replicates)
                .into_par_iter()
                .map(|r| truth.score(e, n, replicate_seed(config.seed, e, n, r)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let points: Vec<SweepPoint> = cells
        .iter()
        .zip(&scores)
        .map(|(&(estimator, n), values)| {
            let (mean, se) = mean_se(values);
            SweepPoint { estimator, n, replicates: config.replicates, mean, se }
        })
        .collect();

    let n_star: Vec<NStar> = estimators
        .iter()
        .flat_map(|&estimator| {
            let points = &points;
            config.thresholds.iter().map(move |&tau| NStar {
                estimator,
                tau,
                n_star: points.iter().find(|p| p.estimator == estimator && p.mean >= tau).map(|p| p.n),
            })
        })
        .collect();

    let lookup = |e: EstimatorKind, tau: f64| n_star.iter().find(|r| r.estimator == e && r.tau == tau).and_then(|r| r.n_star);
    let mut delta_n = Vec::new();
    if estimators.contains(&EstimatorKind::Direct) {
        for &e in estimators.iter().filter(|&&e| e != EstimatorKind::Direct) {
            for &tau in &config.thresholds {
                let n_cot = lookup(e, tau);
                let n_direct = lookup(EstimatorKind::Direct, tau);
                let diff = n_cot.zip(n_direct).map(|(c, d)| c as i64 - d as i64);
                delta_n.push(DeltaN { estimator: e, tau, n_cot, n_direct, delta_n: diff });
            }
        }
    }

    let monotonicity_flags = estimators
        .iter()
        .flat_map(|&e| {
            let curve: Vec<&SweepPoint> = points.iter().filter(|p| p.estimator == e).collect();
            curve
                .windows(2)
                .filter_map(|w| {
                    let drop = w[0].mean - w[1].mean;
                    let tol = 2.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
                    (drop > tol).then(|| MonotonicityFlag { estimator: e, n_from: w[0].n, n_to: w[1].n, drop })
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let (profile, violations, bounds) = theory(instance, &config.thresholds, &config.theory)?;
    Ok(SweepResult {
        experiment: config.experiment.clone(),
        condition: config.condition_label(),
        metric: config.metric,
        seed: config.seed,
        replicates: config.replicates,
        n_grid: config.n_grid.clone(),
        thresholds: config.thresholds.clone(),
        points,
        n_star,
        delta_n,
        profile,
        violations,
        bounds,
        monotonicity_flags,
    })
}

type Theory = (StructuralProfile, Vec<ViolationTag>, Vec<BoundReport>);

fn theory(instance: &Instance<f64>, thresholds: &[f64], config: &TheoryConfig) -> Result<Theory> {
    let outcome = compute_profile(instance, config.m_max)?;
    let bounds = thresholds
        .iter()
        .filter(|&&tau| tau < 1.0)
        .map(|&tau| BoundReport::compute(&outcome.profile, 1.0 - tau, config.constant, None, config.coverage))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((outcome.profile, outcome.violations, bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::Alignment;
    use crate::chain::{Distribution, InstanceFile, Kernel};
    use crate::harness::config::{InstanceSource, SyntheticSpec};

    fn small(alignment: Alignment) -> SweepConfig {
        let mut c = SweepConfig::new("t", InstanceSource::Synthetic(SyntheticSpec::new(alignment, 2)));
        c.replicates = 20;
        c.n_grid = vec![8, 16, 32];
        c
    }

    #[test]
    fn sweep_is_deterministic_and_shaped() {
        let c = small(Alignment::Same);
        let a = run_sweep(&c).unwrap();
        assert_eq!(a, run_sweep(&c).unwrap());
        assert_eq!(a.points.len(), 6);
        assert_eq!(a.estimators(), vec![EstimatorKind::Direct, EstimatorKind::CotHomogeneous]);
        assert_eq!(a.n_star.len(), 8);
        assert_eq!(a.delta_n.len(), 4);
        assert!(a.violations.is_empty());
        assert_eq!(a.bounds.len(), 4);
        assert!((a.bounds[0].delta - 0.3).abs() < 1e-12);
    }

    #[test]
    fn misaligned_uses_heterogeneous_cot() {
        let r = run_sweep(&small(Alignment::Diff)).unwrap();
        assert_eq!(r.cot_estimator(), Some(EstimatorKind::CotHeterogeneous));
    }

    #[test]
    fn homogeneous_estimator_rejected_on_heterogeneous_instance() {
        let mut c = small(Alignment::Diff);
        c.estimators = vec![EstimatorKind::CotHomogeneous];
        assert!(matches!(run_sweep(&c), Err(HarnessError::IncompatibleEstimator { .. })));
    }

    #[test]
    fn invalid_grids_rejected() {
        let mut c = small(Alignment::Same);
        c.n_grid = vec![8, 8];
        assert!(matches!(run_sweep(&c), Err(HarnessError::InvalidConfig(_))));
        c.n_grid = vec![8];
        c.replicates = 0;
        assert!(matches!(run_sweep(&c), Err(HarnessError::InvalidConfig(_))));
    }

    #[test]
    fn deterministic_permutation_saturates_at_coverage() {
        let p = Kernel::<f64>::from_permutation(&[1, 2, 0]).unwrap();
        let inst = Instance::homogeneous(Distribution::uniform(3), p, 2).unwrap();
        let mut c = SweepConfig::new("perm", InstanceSource::Inline(InstanceFile::from_instance(&inst)));
        c.n_grid = (1..=40).collect();
        c.replicates = 30;
        c.metric = Metric::AllRowsCorrect;
        let r = run_sweep(&c).unwrap();
        for e in r.estimators() {
            assert!((r.curve(e).last().unwrap().mean - 1.0).abs() < 1e-12);
        }
        for p in r.curve(EstimatorKind::Direct) {
            // without noise a covered row is always right, so metric = P(all rows covered)
            assert!(p.mean <= 1.0);
        }
        assert!(r.profile.delta_q > 0.99);
    }

    #[test]
    fn standard_error_matches_formula() {
        let (m, se) = mean_se(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(m, 0.5);
        let sd = (1.0f64 / 3.0).sqrt();
        assert!((se - sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[0.25]), (0.25, 0.0));
    }
}
