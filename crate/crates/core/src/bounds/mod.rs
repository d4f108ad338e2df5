//! Closed-form sample-complexity rates and concentration tails.
//!
//! Every rate carries an explicit multiplicative constant `C` because the
//! underlying results are stated up to unspecified absolute constants. The
//! rates are shapes, not calibrated sample sizes.

mod profile;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::ChainError;

pub use profile::{compute_profile, erosion, profile, ProfileOutcome, StructuralProfile, ViolationTag};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("assumptions violated: {}", list(.0))]
    AssumptionViolated(Vec<ViolationTag>),
    #[error("erosion factor r = {r} is not positive; the homogeneous bound is vacuous")]
    ErosionNonpositive { r: f64 },
    #[error("the stationary quantities are only defined for homogeneous irreducible instances")]
    NotHomogeneous,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

fn list(tags: &[ViolationTag]) -> String {
    tags.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("; ")
}

fn check_delta(delta: f64) -> Result<(), BoundsError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn require(pairs: &[(bool, ViolationTag)]) -> Result<(), BoundsError> {
    let failed: Vec<ViolationTag> = pairs.iter().filter(|(ok, _)| !ok).map(|(_, t)| *t).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(BoundsError::AssumptionViolated(failed))
    }
}

/// `C log(k/delta) / (mu_min Delta_Q^2)`.
pub fn bound_direct(p: &StructuralProfile, delta: f64, constant: f64) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    require(&[(p.mu_min > 0.0, ViolationTag::MuMinZero), (p.delta_q > 0.0, ViolationTag::DeltaQZero)])?;
    Ok(constant * (p.k as f64 / delta).ln() / (p.mu_min * p.delta_q * p.delta_q))
}

/// `C (1/(T pi_min Delta_P^2 r) + 1/(T pi_min^2 r^2)) log(k/delta)`.
pub fn bound_homogeneous(p: &StructuralProfile, delta: f64, constant: f64) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    let (Some(delta_p), Some(pi_min), Some(gamma), Some(chi0)) = (p.delta_p, p.pi_min, p.gamma_ps, p.chi0) else {
        return Err(BoundsError::NotHomogeneous);
    };
    require(&[(delta_p > 0.0, ViolationTag::DeltaPZero), (gamma > 0.0, ViolationTag::PseudoGapZero)])?;
    let r = erosion(chi0, p.horizon, pi_min, gamma);
    if r <= 0.0 {
        return Err(BoundsError::ErosionNonpositive { r });
    }
    let t = p.horizon as f64;
    let shape = 1.0 / (t * pi_min * delta_p * delta_p * r) + 1.0 / (t * pi_min * pi_min * r * r);
    Ok(constant * shape * (p.k as f64 / delta).ln())
}

/// `C log(T k/delta) / (q_min Delta^2)`.
pub fn bound_heterogeneous(p: &StructuralProfile, delta: f64, constant: f64) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    require(&[(p.q_min > 0.0, ViolationTag::QMinZero), (p.delta > 0.0, ViolationTag::DeltaZero)])?;
    let tk = (p.horizon * p.k) as f64;
    Ok(constant * (tk / delta).ln() / (p.q_min * p.delta * p.delta))
}

/// Constants of the aggregated-coverage bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for CoverageConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 0.0 }
    }
}

/// `n T pi_min - n chi0/gamma - sqrt(c1 n T/gamma log(k/delta)) - c2`.
///
/// May be negative, in which case it says nothing.
pub fn coverage_lower_bound(
    p: &StructuralProfile,
    n: f64,
    delta: f64,
    constants: CoverageConstants,
) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    let (Some(pi_min), Some(gamma), Some(chi0)) = (p.pi_min, p.gamma_ps, p.chi0) else {
        return Err(BoundsError::NotHomogeneous);
    };
    let t = p.horizon as f64;
    let fluctuation = (constants.c1 * n * t / gamma * (p.k as f64 / delta).ln()).sqrt();
    Ok(n * t * pi_min - n * chi0 / gamma - fluctuation - constants.c2)
}

/// `Pr{N_i(0) <= n mu_i / 2} <= exp(-n mu_i / 8)`.
pub fn chernoff_coverage_tail(n: f64, mu_i: f64) -> f64 {
    (-n * mu_i / 8.0).exp()
}

/// Union of [`chernoff_coverage_tail`] over `k` rows at `mu_min`.
pub fn chernoff_union_tail(k: usize, n: f64, mu_min: f64) -> f64 {
    k as f64 * chernoff_coverage_tail(n, mu_min)
}

/// Probability that some runner-up ties or beats the top class among `n`
/// multinomial draws with margin `margin`: at most `(k-1) exp(-2 n margin^2)`.
pub fn hoeffding_top1_tail(k: usize, n: f64, margin: f64) -> f64 {
    (k as f64 - 1.0) * (-2.0 * n * margin * margin).exp()
}

/// `1/2 (1-gamma)^((n - 1/gamma)/2) chi0`, bounding the TV distance of the
/// law after `n` steps from stationarity.
pub fn tv_decay_bound(gamma: f64, chi0: f64, n: f64) -> f64 {
    0.5 * (1.0 - gamma).powf((n - 1.0 / gamma) / 2.0) * chi0
}

/// Bernstein-type tail `2 exp(-a1 gamma u^2 / (T sigma^2 + a2 b u))` for
/// additive functionals of a stationary chain. The absolute constants are
/// not known; callers choose `a1`, `a2`.
#[allow(clippy::too_many_arguments)]
pub fn bernstein_tail(gamma: f64, horizon: f64, sigma2: f64, b: f64, u: f64, a1: f64, a2: f64) -> f64 {
    2.0 * (-a1 * gamma * u * u / (horizon * sigma2 + a2 * b * u)).exp()
}

/// Theoretical sample sizes for one profile, `None` where a bound does not
/// apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constant: f64,
    pub delta: f64,
    pub n_direct: Option<f64>,
    pub n_homogeneous: Option<f64>,
    pub n_heterogeneous: Option<f64>,
    /// Coverage bound evaluated at `coverage_n`.
    pub coverage_n: f64,
    pub coverage_lower_bound: Option<f64>,
}

impl BoundReport {
    /// Evaluates every applicable bound. The coverage bound is evaluated at
    /// `coverage_n`, or at the homogeneous rate when that is `None`.
    pub fn compute(
        p: &StructuralProfile,
        delta: f64,
        constant: f64,
        coverage_n: Option<f64>,
        constants: CoverageConstants,
    ) -> Result<Self, BoundsError> {
        check_delta(delta)?;
        let n_direct = bound_direct(p, delta, constant).ok();
        let n_homogeneous = if p.homogeneous { bound_homogeneous(p, delta, constant).ok() } else { None };
        let n_heterogeneous = bound_heterogeneous(p, delta, constant).ok();
        let coverage_n = coverage_n.or(n_homogeneous).unwrap_or(0.0);
        let coverage_lower_bound =
            if p.has_stationary() { coverage_lower_bound(p, coverage_n, delta, constants).ok() } else { None };
        Ok(Self { constant, delta, n_direct, n_homogeneous, n_heterogeneous, coverage_n, coverage_lower_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Distribution, Instance, Kernel};

    fn k64(rows: &[&[f64]]) -> Kernel<f64> {
        Kernel::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn het(p1: &[&[f64]], p2: &[&[f64]]) -> Instance<f64> {
        Instance::new(Distribution::uniform(2), vec![k64(p1), k64(p2)]).unwrap()
    }

    fn blank() -> StructuralProfile {
        StructuralProfile {
            k: 2,
            horizon: 2,
            homogeneous: false,
            mu_min: 0.5,
            delta_q: 0.28,
            delta: 0.4,
            q_min: 0.3,
            delta_p: None,
            pi_min: None,
            gamma_ps: None,
            achieving_m: None,
            chi0: None,
            r: None,
            spectral_warnings: vec![],
        }
    }

    #[test]
    fn margin_pairs_margins() {
        let a = profile(&het(&[&[0.6, 0.4], &[0.1, 0.9]], &[&[0.9, 0.1], &[0.3, 0.7]])).unwrap();
        assert!((a.delta - 0.2).abs() < 1e-12 && (a.delta_q - 0.28).abs() < 1e-12);
        assert!(a.delta_q > a.delta);
        let b = profile(&het(&[&[0.8, 0.2], &[0.8, 0.2]], &[&[0.7, 0.3], &[0.3, 0.7]])).unwrap();
        assert!((b.delta - 0.4).abs() < 1e-12 && (b.delta_q - 0.24).abs() < 1e-12);
        assert!(b.delta_q < b.delta);
    }

    #[test]
    fn stationary_start_has_no_erosion() {
        let p = k64(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let inst = Instance::homogeneous(Distribution::new(vec![0.75, 0.25]).unwrap(), p, 1).unwrap();
        let prof = profile(&inst).unwrap();
        assert!(prof.chi0.unwrap().abs() < 1e-12);
        assert!((prof.r.unwrap() - 1.0).abs() < 1e-12);
        assert!((prof.pi_min.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn direct_plug_in() {
        // ln(20) / (0.5 * 0.0784)
        let v = bound_direct(&blank(), 0.1, 1.0).unwrap();
        assert!((v - 76.4217).abs() < 1e-3);
        let mut wide = blank();
        wide.delta_q = 0.56;
        assert!((bound_direct(&wide, 0.1, 1.0).unwrap() * 4.0 - v).abs() < 1e-9);
        let extra = bound_direct(&blank(), 0.01, 1.0).unwrap() - v;
        assert!((extra - 10f64.ln() / (0.5 * 0.0784)).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_plug_in() {
        let mut p = blank();
        p.homogeneous = true;
        p.horizon = 8;
        p.delta_p = Some(0.4);
        p.pi_min = Some(0.25);
        p.gamma_ps = Some(0.5);
        p.chi0 = Some(0.0);
        // (3.125 + 2) * ln(20)
        let v = bound_homogeneous(&p, 0.1, 1.0).unwrap();
        assert!((v - 5.125 * 20f64.ln()).abs() < 1e-9);
        assert!((v - 15.35).abs() < 0.01);
        p.chi0 = Some(10.0);
        assert!(matches!(bound_homogeneous(&p, 0.1, 1.0), Err(BoundsError::ErosionNonpositive { .. })));
        assert_eq!(bound_homogeneous(&blank(), 0.1, 1.0), Err(BoundsError::NotHomogeneous));
    }

    #[test]
    fn heterogeneous_plug_in() {
        // ln(40) / (0.3 * 0.16)
        let v = bound_heterogeneous(&blank(), 0.1, 1.0).unwrap();
        assert!((v - 76.85).abs() < 0.01);
        let mut half = blank();
        half.q_min = 0.15;
        assert!((bound_heterogeneous(&half, 0.1, 1.0).unwrap() - 2.0 * v).abs() < 1e-9);
    }

    #[test]
    fn coverage_at_stationary_start_without_fluctuation() {
        let mut p = blank();
        p.horizon = 10;
        p.pi_min = Some(0.25);
        p.gamma_ps = Some(0.6);
        p.chi0 = Some(0.0);
        let zero = CoverageConstants { c1: 0.0, c2: 0.0 };
        assert!((coverage_lower_bound(&p, 100.0, 0.1, zero).unwrap() - 250.0).abs() < 1e-12);
        let a = coverage_lower_bound(&p, 100.0, 0.1, CoverageConstants::default()).unwrap();
        let b = coverage_lower_bound(&p, 200.0, 0.1, CoverageConstants::default()).unwrap();
        assert!(b > a);
    }

    #[test]
    fn invalid_delta_and_violations() {
        assert!(matches!(bound_direct(&blank(), 1.5, 1.0), Err(BoundsError::InvalidArgument(_))));
        let mut p = blank();
        p.mu_min = 0.0;
        p.delta_q = 0.0;
        assert_eq!(
            bound_direct(&p, 0.1, 1.0),
            Err(BoundsError::AssumptionViolated(vec![ViolationTag::MuMinZero, ViolationTag::DeltaQZero]))
        );
    }

    #[test]
    fn report_fills_applicable_rows() {
        let r = BoundReport::compute(&blank(), 0.1, 2.0, None, CoverageConstants::default()).unwrap();
        assert!(r.n_direct.is_some() && r.n_heterogeneous.is_some());
        assert!(r.n_homogeneous.is_none() && r.coverage_lower_bound.is_none());
    }

    #[test]
    fn tails() {
        assert!((chernoff_union_tail(4, 400.0, 0.25) - 4.0 * (-12.5f64).exp()).abs() < 1e-18);
        assert!((hoeffding_top1_tail(4, 10.0, 0.4) - 3.0 * (-3.2f64).exp()).abs() < 1e-15);
        assert_eq!(tv_decay_bound(0.5, 0.0, 10.0), 0.0);
        assert!(bernstein_tail(0.5, 10.0, 1.0, 1.0, 0.0, 1.0, 1.0) == 2.0);
    }
}
