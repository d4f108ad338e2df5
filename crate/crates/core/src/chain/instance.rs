use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::distribution::Distribution;
use super::error::{ChainError, Result};
use super::kernel::{compose, Kernel};
use crate::scalar::Scalar;

/// Where a generated instance came from. Part of the instance digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(family: impl Into<String>) -> Self {
        Self { family: family.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

/// A reasoning instance: an initial law over `[k]` and the ordered per-step
/// kernels `P(1), ..., P(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S> {
    mu: Distribution<S>,
    kernels: Vec<Kernel<S>>,
    homogeneous: bool,
    provenance: Option<Provenance>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(mu: Distribution<S>, kernels: Vec<Kernel<S>>) -> Result<Self> {
        let first = kernels.first().ok_or(ChainError::EmptyKernelList)?;
        let k = first.k();
        if mu.len() != k {
            return Err(ChainError::DimensionMismatch { expected: k, found: mu.len() });
        }
        if let Some(bad) = kernels.iter().find(|p| p.k() != k) {
            return Err(ChainError::DimensionMismatch { expected: k, found: bad.k() });
        }
        let tol = S::tie_tolerance();
        let homogeneous = kernels.iter().all(|p| p.approx_eq(first, &tol));
        Ok(Self { mu, kernels, homogeneous, provenance: None })
    }

    /// `T` copies of the same kernel.
    pub fn homogeneous(mu: Distribution<S>, kernel: Kernel<S>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(ChainError::EmptyKernelList);
        }
        Self::new(mu, vec![kernel; horizon])
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    /// Number of steps `T`.
    pub fn horizon(&self) -> usize {
        self.kernels.len()
    }

    pub fn mu(&self) -> &Distribution<S> {
        &self.mu
    }

    pub fn kernels(&self) -> &[Kernel<S>] {
        &self.kernels
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// End-to-end kernel `Q = P(1) ... P(T)`.
    pub fn end_to_end(&self) -> Kernel<S> {
        compose(&self.kernels).expect("validated at construction")
    }

    /// Marginal laws `mu(t) = mu P(1) ... P(t)` for `t = 0..=T`.
    pub fn marginals(&self) -> Vec<Distribution<S>> {
        let mut out = Vec::with_capacity(self.horizon() + 1);
        out.push(self.mu.clone());
        for p in &self.kernels {
            let next = p.push_forward(out.last().expect("nonempty")).expect("same k");
            out.push(next);
        }
        out
    }

    /// Stable SHA-256 digest over the canonical text form of the instance,
    /// including provenance.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_text().as_bytes());
        hex::encode(hasher.finalize())
    }

    fn canonical_text(&self) -> String {
        let join = |vals: &[S]| vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let mut text = format!("k={};T={};mu=[{}];kernels=[", self.k(), self.horizon(), join(self.mu.weights()));
        for p in &self.kernels {
            text.push('[');
            for row in p.rows() {
                text.push('[');
                text.push_str(&join(row));
                text.push(']');
            }
            text.push(']');
        }
        text.push(']');
        if let Some(prov) = &self.provenance {
            text.push_str(&format!(";family={}", prov.family));
            for (key, value) in &prov.params {
                text.push_str(&format!(";{key}={value}"));
            }
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn margin_pair() -> Instance<f64> {
        let p1 = Kernel::new(vec![vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap();
        let p2 = Kernel::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        Instance::new(Distribution::uniform(2), vec![p1, p2]).unwrap()
    }

    #[test]
    fn homogeneous_flag_tracks_kernels() {
        assert!(!margin_pair().is_homogeneous());
        let p = Kernel::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let inst = Instance::homogeneous(Distribution::uniform(2), p, 4).unwrap();
        assert!(inst.is_homogeneous());
        assert_eq!(inst.horizon(), 4);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let p = Kernel::<f64>::identity(3).unwrap();
        assert!(matches!(
            Instance::new(Distribution::uniform(2), vec![p]),
            Err(ChainError::DimensionMismatch { .. })
        ));
        assert_eq!(Instance::<f64>::new(Distribution::uniform(2), vec![]), Err(ChainError::EmptyKernelList));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = margin_pair();
        assert_eq!(a.digest(), margin_pair().digest());
        let b = margin_pair().with_provenance(Provenance::new("two_step").with("pair", 1));
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn marginals_follow_kernels() {
        let m = margin_pair().marginals();
        assert_eq!(m.len(), 3);
        // (0.5, 0.5) P1 = (0.35, 0.65)
        assert!((m[1].weights()[0] - 0.35).abs() < 1e-12);
    }
}
