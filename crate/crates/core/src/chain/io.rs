//! TOML instance files.
//!
//! ```toml
//! k = 2
//! T = 2
//! mu = [0.5, 0.5]
//! kernels = [
//!   [[0.6, 0.4], [0.1, 0.9]],
//!   [[0.9, 0.1], [0.3, 0.7]],
//! ]
//!
//! [provenance]
//! family = "two_step"
//! ```

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::error::{ChainError, Result};
use super::instance::{Instance, Provenance};
use super::kernel::Kernel;
use crate::scalar::{rational_from_decimal, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub mu: Vec<f64>,
    pub kernels: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl InstanceFile {
    pub fn from_instance<S: Scalar>(instance: &Instance<S>) -> Self {
        let to_vec = |row: &[S]| row.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>();
        Self {
            k: instance.k(),
            horizon: instance.horizon(),
            mu: to_vec(instance.mu().weights()),
            kernels: instance.kernels().iter().map(|p| p.rows().map(to_vec).collect()).collect(),
            provenance: instance.provenance().cloned(),
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.kernels.len() != self.horizon {
            return Err(ChainError::Format(format!(
                "T = {} but {} kernels were given",
                self.horizon,
                self.kernels.len()
            )));
        }
        if self.mu.len() != self.k {
            return Err(ChainError::DimensionMismatch { expected: self.k, found: self.mu.len() });
        }
        if let Some(p) = self.kernels.iter().find(|p| p.len() != self.k) {
            return Err(ChainError::DimensionMismatch { expected: self.k, found: p.len() });
        }
        Ok(())
    }

    fn build<S: Scalar>(&self, convert: impl Fn(f64) -> Result<S>) -> Result<Instance<S>> {
        self.check_shape()?;
        let mu = Distribution::new(self.mu.iter().map(|&v| convert(v)).collect::<Result<_>>()?)?;
        let kernels = self
            .kernels
            .iter()
            .map(|rows| {
                let rows = rows
                    .iter()
                    .map(|row| row.iter().map(|&v| convert(v)).collect::<Result<Vec<S>>>())
                    .collect::<Result<Vec<_>>>()?;
                Kernel::new(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let instance = Instance::new(mu, kernels)?;
        Ok(match &self.provenance {
            Some(p) => instance.with_provenance(p.clone()),
            None => instance,
        })
    }

    pub fn to_instance(&self) -> Result<Instance<f64>> {
        self.build(Ok)
    }

    /// Reads every probability as the exact decimal it was written as, so
    /// `0.1` becomes `1/10` rather than the nearest binary fraction.
    pub fn to_exact_instance(&self) -> Result<Instance<BigRational>> {
        self.build(|v| {
            rational_from_decimal(&format!("{v}")).ok_or_else(|| ChainError::Format(format!("not a decimal: {v}")))
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ChainError::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ChainError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ChainError::Format(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
