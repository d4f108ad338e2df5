use std::fmt;

use serde::{Deserialize, Serialize};

use super::BoundsError;
use crate::chain::{
    check_local_global_consistency, row_margins, spectral_report, ChainError, Instance, SpectralWarning,
    DEFAULT_M_MAX,
};
use crate::scalar::Real;

/// A failed structural assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationTag {
    MuMinZero,
    DeltaQZero,
    LocalGlobalInconsistent,
    DeltaPZero,
    NotIrreducible,
    PseudoGapZero,
    ErosionNonpositive,
    DeltaZero,
    QMinZero,
}

impl fmt::Display for ViolationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            ViolationTag::MuMinZero => "mu_min = 0",
            ViolationTag::DeltaQZero => "Delta_Q = 0",
            ViolationTag::LocalGlobalInconsistent => "local hard-max maps do not compose to the global one",
            ViolationTag::DeltaPZero => "Delta_P = 0",
            ViolationTag::NotIrreducible => "kernel is not irreducible",
            ViolationTag::PseudoGapZero => "pseudo-spectral gap = 0",
            ViolationTag::ErosionNonpositive => "r <= 0",
            ViolationTag::DeltaZero => "Delta = 0",
            ViolationTag::QMinZero => "q_min = 0",
        };
        f.write_str(text)
    }
}

/// Every structural quantity the rate expressions depend on, in `f64`.
///
/// The step-wise quantities (`delta`, `q_min`) are always filled. The
/// stationary ones are `Some` only for homogeneous instances whose kernel is
/// irreducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralProfile {
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub homogeneous: bool,
    pub mu_min: f64,
    pub delta_q: f64,
    /// Smallest per-step margin over all kernels.
    pub delta: f64,
    /// `min_{0 <= t < T} min_i mu(t)_i`.
    pub q_min: f64,
    pub delta_p: Option<f64>,
    pub pi_min: Option<f64>,
    pub gamma_ps: Option<f64>,
    pub achieving_m: Option<usize>,
    pub chi0: Option<f64>,
    pub r: Option<f64>,
    pub spectral_warnings: Vec<SpectralWarning>,
}

impl StructuralProfile {
    /// True when the stationary block is available.
    pub fn has_stationary(&self) -> bool {
        self.pi_min.is_some() && self.gamma_ps.is_some() && self.chi0.is_some()
    }
}

/// A profile together with the assumptions it breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOutcome {
    pub profile: StructuralProfile,
    pub violations: Vec<ViolationTag>,
}

/// Computes the profile and lists every violated assumption without failing.
///
/// Checks common to all regimes: `mu_min`, `Delta_Q`, local-global
/// consistency. Homogeneous instances are then checked for `Delta_P`,
/// irreducibility, the pseudo-gap and erosion (`r` only when the gap is
/// positive); heterogeneous ones for `Delta` and `q_min`.
pub fn compute_profile<S: Real>(instance: &Instance<S>, m_max: usize) -> Result<ProfileOutcome, BoundsError> {
    let f = |v: S| v.to_f64_lossy();
    let mut violations = Vec::new();

    let mu_min = f(instance.mu().min());
    let delta_q = f(row_margins(&instance.end_to_end()).global_margin);
    let delta = instance
        .kernels()
        .iter()
        .map(|p| f(row_margins(p).global_margin))
        .fold(f64::INFINITY, f64::min);
    let marginals = instance.marginals();
    let q_min = marginals[..instance.horizon()].iter().map(|d| f(d.min())).fold(f64::INFINITY, f64::min);

    if mu_min <= 0.0 {
        violations.push(ViolationTag::MuMinZero);
    }
    if delta_q <= 0.0 {
        violations.push(ViolationTag::DeltaQZero);
    }
    if !check_local_global_consistency(instance).consistent {
        violations.push(ViolationTag::LocalGlobalInconsistent);
    }

    let mut profile = StructuralProfile {
        k: instance.k(),
        horizon: instance.horizon(),
        homogeneous: instance.is_homogeneous(),
        mu_min,
        delta_q,
        delta,
        q_min,
        delta_p: None,
        pi_min: None,
        gamma_ps: None,
        achieving_m: None,
        chi0: None,
        r: None,
        spectral_warnings: Vec::new(),
    };

    if instance.is_homogeneous() {
        let p = &instance.kernels()[0];
        let delta_p = f(row_margins(p).global_margin);
        profile.delta_p = Some(delta_p);
        if delta_p <= 0.0 {
            violations.push(ViolationTag::DeltaPZero);
        }
        match spectral_report(p, instance.mu(), m_max) {
            Ok(spec) => {
                let pi_min = f(spec.stationary.min());
                let gamma = f(spec.pseudo_gap);
                let chi0 = f(spec.chi0);
                profile.pi_min = Some(pi_min);
                profile.gamma_ps = Some(gamma);
                profile.achieving_m = Some(spec.achieving_m);
                profile.chi0 = Some(chi0);
                profile.spectral_warnings = spec.warnings;
                if gamma <= 0.0 {
                    violations.push(ViolationTag::PseudoGapZero);
                } else {
                    let r = erosion(chi0, instance.horizon(), pi_min, gamma);
                    profile.r = Some(r);
                    if r <= 0.0 {
                        violations.push(ViolationTag::ErosionNonpositive);
                    }
                }
            }
            Err(ChainError::NotIrreducible { .. }) => violations.push(ViolationTag::NotIrreducible),
            Err(e) => return Err(e.into()),
        }
    } else {
        if delta <= 0.0 {
            violations.push(ViolationTag::DeltaZero);
        }
        if q_min <= 0.0 {
            violations.push(ViolationTag::QMinZero);
        }
    }
    Ok(ProfileOutcome { profile, violations })
}

/// `r = 1 - chi0 / (T pi_min gamma)`.
pub fn erosion(chi0: f64, horizon: usize, pi_min: f64, gamma: f64) -> f64 {
    1.0 - chi0 / (horizon as f64 * pi_min * gamma)
}

/// Like [`compute_profile`] with the default truncation, but fails with the
/// complete violation list if any assumption is broken.
pub fn profile<S: Real>(instance: &Instance<S>) -> Result<StructuralProfile, BoundsError> {
    let outcome = compute_profile(instance, DEFAULT_M_MAX)?;
    if outcome.violations.is_empty() {
        Ok(outcome.profile)
    } else {
        Err(BoundsError::AssumptionViolated(outcome.violations))
    }
}
