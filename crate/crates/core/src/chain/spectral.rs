//! Pseudo-spectral gap of a possibly nonreversible kernel.
//!
//! For each `m` the operator `A_m = (P*)^m P^m` is self-adjoint on
//! `L2(pi)`, where `P*` is the time reversal `pi_i P*_ij = pi_j P_ji`.
//! Conjugating by `diag(sqrt(pi))` turns it into an ordinary symmetric
//! matrix whose second-largest eigenvalue gives `gap(m) = 1 - lambda_2`.
//! The pseudo-gap is `max_m gap(m) / m`, truncated at `m_max`.

use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::divergence::chi_square;
use super::eigen::symmetric_eigenvalues;
use super::error::{ChainError, Result};
use super::kernel::{mat_mul, Kernel};
use super::stationary::stationary;
use crate::scalar::Real;

pub const DEFAULT_M_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralWarning {
    /// `gap(m) = 0` for every evaluated `m`; the chain is periodic (or
    /// otherwise never contracts) and the reported gap is 0.
    PeriodicChain,
    /// The maximum was attained at `m_max`; a larger truncation might
    /// find a larger value.
    MaxAtTruncation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSpectralGap<S> {
    pub stationary: Distribution<S>,
    pub pseudo_gap: S,
    pub achieving_m: usize,
    /// `(m, gap(m) / m)` for `m = 1..=m_max`.
    pub per_m_gaps: Vec<(usize, S)>,
    pub warnings: Vec<SpectralWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport<S> {
    pub stationary: Distribution<S>,
    pub pseudo_gap: S,
    pub achieving_m: usize,
    /// `sqrt(chi^2(mu || pi))` for the instance's initial law.
    pub chi0: S,
    pub per_m_gaps: Vec<(usize, S)>,
    pub warnings: Vec<SpectralWarning>,
}

impl<S: Real> SpectralReport<S> {
    pub fn is_periodic(&self) -> bool {
        self.warnings.contains(&SpectralWarning::PeriodicChain)
    }
}

/// Time reversal of `kernel` with respect to `pi`.
pub fn time_reversal<S: Real>(kernel: &Kernel<S>, pi: &Distribution<S>) -> Result<Kernel<S>> {
    let k = kernel.k();
    let w = pi.weights();
    if let Some(index) = w.iter().position(|p| *p == S::zero()) {
        return Err(ChainError::ZeroStationaryMass { index });
    }
    let rows = (0..k).map(|i| (0..k).map(|j| w[j] * *kernel.get(j, i) / w[i]).collect()).collect();
    Kernel::new(rows)
}

pub fn pseudo_spectral_gap<S: Real>(kernel: &Kernel<S>, m_max: usize) -> Result<PseudoSpectralGap<S>> {
    if m_max == 0 {
        return Err(ChainError::InvalidArgument("m_max must be at least 1".into()));
    }
    let pi = stationary(kernel)?;
    let reversal = time_reversal(kernel, &pi)?;
    let k = kernel.k();
    let sqrt_pi: Vec<S> = pi.weights().iter().map(|p| p.sqrt()).collect();

    let mut forward = kernel.entries().to_vec();
    let mut backward = reversal.entries().to_vec();
    let mut per_m_gaps = Vec::with_capacity(m_max);
    let mut best = (S::neg_infinity(), 1);
    for m in 1..=m_max {
        if m > 1 {
            forward = mat_mul(&forward, kernel.entries(), k);
            backward = mat_mul(&backward, reversal.entries(), k);
        }
        let a = mat_mul(&backward, &forward, k);
        let mut sym = vec![S::zero(); k * k];
        for i in 0..k {
            for j in 0..k {
                sym[i * k + j] = sqrt_pi[i] * a[i * k + j] / sqrt_pi[j];
            }
        }
        for i in 0..k {
            for j in 0..i {
                let avg = (sym[i * k + j] + sym[j * k + i]) / (S::one() + S::one());
                sym[i * k + j] = avg;
                sym[j * k + i] = avg;
            }
        }
        let eig = symmetric_eigenvalues(&sym, k)?;
        let gap = (S::one() - eig[1]).max(S::zero()).min(S::one());
        let scaled = gap / S::from_count(m);
        per_m_gaps.push((m, scaled));
        if scaled > best.0 {
            best = (scaled, m);
        }
    }

    let mut warnings = Vec::new();
    let (mut pseudo_gap, achieving_m) = best;
    if pseudo_gap <= S::tie_tolerance() {
        pseudo_gap = S::zero();
        warnings.push(SpectralWarning::PeriodicChain);
    } else if achieving_m == m_max && m_max > 1 {
        warnings.push(SpectralWarning::MaxAtTruncation);
    }
    Ok(PseudoSpectralGap { stationary: pi, pseudo_gap, achieving_m, per_m_gaps, warnings })
}

/// Pseudo-spectral gap plus the initialization bias `chi0` of `mu`.
pub fn spectral_report<S: Real>(kernel: &Kernel<S>, mu: &Distribution<S>, m_max: usize) -> Result<SpectralReport<S>> {
    let psg = pseudo_spectral_gap(kernel, m_max)?;
    let chi0 = chi_square(mu, &psg.stationary)?.sqrt();
    Ok(SpectralReport {
        stationary: psg.stationary,
        pseudo_gap: psg.pseudo_gap,
        achieving_m: psg.achieving_m,
        chi0,
        per_m_gaps: psg.per_m_gaps,
        warnings: psg.warnings,
    })
}
