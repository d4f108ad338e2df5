use std::fmt;

use super::error::{ChainError, Result};
use crate::scalar::Scalar;

/// A probability vector over `[k]`.
#[derive(Clone, PartialEq)]
pub struct Distribution<S> {
    weights: Vec<S>,
}

impl<S: Scalar> Distribution<S> {
    /// Validates nonnegativity and the unit sum (within the scalar's
    /// tolerance, renormalizing small deviations).
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(ChainError::TooSmall { k: 0 });
        }
        if let Some((index, v)) = weights.iter().enumerate().find(|(_, v)| **v < S::zero()) {
            return Err(ChainError::NegativeProbability { index, value: v.to_f64_lossy() });
        }
        let sum = weights.iter().cloned().fold(S::zero(), |a, b| a + b);
        let deviation = (sum.clone() - S::one()).abs();
        if deviation > S::stochastic_tolerance() {
            return Err(ChainError::DistributionSum { sum: sum.to_f64_lossy() });
        }
        if deviation <= S::tie_tolerance() {
            Ok(Self { weights })
        } else {
            Ok(Self { weights: weights.into_iter().map(|w| w / sum.clone()).collect() })
        }
    }

    /// Like [`Distribution::new`] but first clamps entries in
    /// `(-tolerance, 0)` to zero; used for numerically solved vectors.
    pub(crate) fn from_solution(weights: Vec<S>) -> Result<Self> {
        let tol = S::stochastic_tolerance();
        let cleaned = weights
            .into_iter()
            .map(|w| if w < S::zero() && -w.clone() <= tol { S::zero() } else { w })
            .collect();
        Self::new(cleaned)
    }

    pub fn uniform(k: usize) -> Self {
        let w = S::one() / S::from_count(k);
        Self { weights: vec![w; k] }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut weights = vec![S::zero(); k];
        weights[at] = S::one();
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn min(&self) -> S {
        self.weights
            .iter()
            .cloned()
            .reduce(|a, b| if b < a { b } else { a })
            .expect("nonempty")
    }
}

impl<S: fmt::Debug> fmt::Debug for Distribution<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.weights).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn rejects_negative_and_bad_sum() {
        assert!(matches!(
            Distribution::new(vec![1.1, -0.1]),
            Err(ChainError::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(Distribution::new(vec![0.5, 0.6]), Err(ChainError::DistributionSum { .. })));
    }

    #[test]
    fn uniform_and_point_mass() {
        let u = Distribution::<num_rational::BigRational>::uniform(4);
        assert_eq!(u.min(), ratio(1, 4));
        let d = Distribution::<f64>::point_mass(3, 2);
        assert_eq!(d.weights(), &[0.0, 0.0, 1.0]);
        assert_eq!(d.min(), 0.0);
    }
}
