use serde::{Deserialize, Serialize};

use super::config::{InstanceSource, NoiseConfig, SweepConfig};
use super::sweep::{run_sweep_on, SweepResult};
use super::{HarnessError, Result};
use crate::benchgen::{build_synthetic_instance, Alignment};
use crate::chain::row_margins;
use crate::estimators::EstimatorKind;
use crate::scalar::Scalar;

/// One noise level at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub p: f64,
    /// Exact margins, computed in rational arithmetic.
    pub delta_p: f64,
    pub delta_q: f64,
    pub ratio: f64,
    pub tau: f64,
    pub n_direct: Option<usize>,
    pub n_cot: Option<usize>,
    pub delta_n: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub experiment: String,
    /// Levels ordered from least to most noise (decreasing `p`).
    pub p_levels: Vec<f64>,
    pub rows: Vec<NoiseRow>,
    pub sweeps: Vec<SweepResult>,
}

impl NoiseReport {
    pub fn rows_at(&self, tau: f64) -> Vec<&NoiseRow> {
        self.rows.iter().filter(|r| r.tau == tau).collect()
    }

    /// `Delta_Q / Delta_P` strictly decreases as noise grows.
    pub fn ratio_strictly_decreasing(&self) -> bool {
        let tau = self.rows.first().map(|r| r.tau);
        let rows: Vec<&NoiseRow> = self.rows.iter().filter(|r| Some(r.tau) == tau).collect();
        rows.windows(2).all(|w| w[1].ratio < w[0].ratio)
    }

    /// `Delta_n(tau)` is non-increasing as noise grows, up to one grid step
    /// of slack at the `n*` values involved. `None` when a level has no
    /// defined `Delta_n`.
    pub fn delta_n_non_increasing(&self, tau: f64) -> Option<bool> {
        let rows = self.rows_at(tau);
        let grid = &self.sweeps.first()?.n_grid;
        let mut ok = true;
        for w in rows.windows(2) {
            let (a, b) = (w[0].delta_n?, w[1].delta_n?);
            let involved = [w[0].n_direct?, w[0].n_cot?, w[1].n_direct?, w[1].n_cot?];
            let slack = involved.iter().map(|&n| grid_step(grid, n)).max().unwrap_or(0) as i64;
            ok &= b <= a + slack;
        }
        Some(ok)
    }
}

/// Gap between `n` and the grid point before it.
pub(crate) fn grid_step(grid: &[usize], n: usize) -> usize {
    match grid.iter().position(|&g| g == n) {
        Some(0) | None => grid.get(1).zip(grid.first()).map(|(b, a)| b - a).unwrap_or(0),
        Some(i) => grid[i] - grid[i - 1],
    }
}

/// Sweeps the aligned letter-rule task at each `p`, with direct against
/// homogeneous CoT, and tabulates `Delta_n(tau)` beside the exact margins.
pub fn noise_ablation(config: &NoiseConfig) -> Result<NoiseReport> {
    if config.base.alignment != Alignment::Same {
        return Err(HarnessError::InvalidConfig("noise ablation needs an aligned base task".into()));
    }
    if config.p_grid.is_empty() {
        return Err(HarnessError::InvalidConfig("p_grid is empty".into()));
    }
    let mut levels = config.p_grid.clone();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    for &p in &levels {
        let spec = config.base.clone().with_p(p);
        let exact = build_synthetic_instance(&spec.exact_config()?)?;
        let delta_p = row_margins(&exact.kernels()[0]).global_margin.to_f64_lossy();
        let delta_q = row_margins(&exact.end_to_end()).global_margin.to_f64_lossy();
        let instance = build_synthetic_instance(&spec.config())?;
        let sweep_config = SweepConfig {
            experiment: config.experiment.clone(),
            condition: Some(format!("p{p}")),
            instance: InstanceSource::Synthetic(spec),
            n_grid: config.n_grid.clone(),
            replicates: config.replicates,
            seed: config.seed,
            estimators: vec![EstimatorKind::Direct, EstimatorKind::CotHomogeneous],
            metric: config.metric,
            thresholds: config.thresholds.clone(),
            undefined_policy: config.undefined_policy,
            theory: config.theory,
            base_dir: Default::default(),
        };
        let sweep = run_sweep_on(&sweep_config, &instance)?;
        for &tau in &config.thresholds {
            let d = sweep.delta_n_for(EstimatorKind::CotHomogeneous, tau).cloned();
            rows.push(NoiseRow {
                p,
                delta_p,
                delta_q,
                ratio: delta_q / delta_p,
                tau,
                n_direct: d.as_ref().and_then(|d| d.n_direct),
                n_cot: d.as_ref().and_then(|d| d.n_cot),
                delta_n: d.and_then(|d| d.delta_n),
            });
        }
        sweeps.push(sweep);
    }
    rows.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(b.p.total_cmp(&a.p)));
    Ok(NoiseReport { experiment: config.experiment.clone(), p_levels: levels, rows, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SyntheticSpec;

    #[test]
    fn grid_step_lookup() {
        let g = [8, 12, 16, 32];
        assert_eq!(grid_step(&g, 8), 4);
        assert_eq!(grid_step(&g, 16), 4);
        assert_eq!(grid_step(&g, 32), 16);
    }

    #[test]
    fn margins_and_ratio_per_level() {
        let mut c = NoiseConfig::new(SyntheticSpec::new(Alignment::Same, 2), vec![0.7, 0.9, 0.8]);
        c.replicates = 4;
        c.n_grid = vec![8, 16];
        c.thresholds = vec![0.9];
        let r = noise_ablation(&c).unwrap();
        assert_eq!(r.p_levels, vec![0.9, 0.8, 0.7]);
        let rows = r.rows_at(0.9);
        let expected = [(0.8, 0.63), (0.6, 0.32), (0.4, 0.07)];
        for (row, (dp, dq)) in rows.iter().zip(expected) {
            assert!((row.delta_p - dp).abs() < 1e-15 && (row.delta_q - dq).abs() < 1e-15);
        }
        assert!(r.ratio_strictly_decreasing());
    }

    #[test]
    fn misaligned_base_rejected() {
        let c = NoiseConfig::new(SyntheticSpec::new(Alignment::Diff, 2), vec![0.8]);
        assert!(matches!(noise_ablation(&c), Err(HarnessError::InvalidConfig(_))));
    }
}
