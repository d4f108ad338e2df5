use super::distribution::Distribution;
use super::error::{ChainError, Result};
use crate::scalar::Scalar;

/// `chi^2(mu || pi) = sum_i (mu_i - pi_i)^2 / pi_i`.
pub fn chi_square<S: Scalar>(mu: &Distribution<S>, pi: &Distribution<S>) -> Result<S> {
    if mu.len() != pi.len() {
        return Err(ChainError::DimensionMismatch { expected: pi.len(), found: mu.len() });
    }
    let mut total = S::zero();
    for (index, (m, p)) in mu.weights().iter().zip(pi.weights()).enumerate() {
        if p.is_zero() {
            return Err(ChainError::ZeroStationaryMass { index });
        }
        let d = m.clone() - p.clone();
        total = total + d.clone() * d / p.clone();
    }
    Ok(total)
}

/// Total variation distance `1/2 sum_i |p_i - q_i|`.
pub fn tv_distance<S: Scalar>(p: &Distribution<S>, q: &Distribution<S>) -> Result<S> {
    if p.len() != q.len() {
        return Err(ChainError::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let sum = p
        .weights()
        .iter()
        .zip(q.weights())
        .fold(S::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs());
    Ok(sum / S::from_count(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_traits::Zero;

    fn d(w: &[f64]) -> Distribution<f64> {
        Distribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn chi_square_values() {
        let pi = d(&[0.75, 0.25]);
        assert_eq!(chi_square(&pi, &pi).unwrap(), 0.0);
        // 0.0625/0.75 + 0.0625/0.25
        let c = chi_square(&d(&[0.5, 0.5]), &pi).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_exact() {
        let mu = Distribution::new(vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let pi = Distribution::new(vec![ratio(3, 4), ratio(1, 4)]).unwrap();
        assert_eq!(chi_square(&mu, &pi).unwrap(), ratio(1, 3));
        assert!(chi_square(&pi, &pi).unwrap().is_zero());
    }

    #[test]
    fn chi_square_rejects_zero_mass() {
        assert_eq!(chi_square(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])), Err(ChainError::ZeroStationaryMass { index: 1 }));
    }

    #[test]
    fn tv_values_and_inequality() {
        assert_eq!(tv_distance(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(tv_distance(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 1.0);
        let tv = tv_distance(&d(&[0.5, 0.5]), &d(&[0.75, 0.25])).unwrap();
        assert!((tv - 0.25).abs() < 1e-12);
        let chi = chi_square(&d(&[0.5, 0.5]), &d(&[0.75, 0.25])).unwrap();
        assert!(tv <= 0.5 * chi.sqrt());
        assert!((0.5 * chi.sqrt() - 0.288_675_134_594_812_9).abs() < 1e-12);
    }

    #[test]
    fn tv_dimension_mismatch() {
        assert!(matches!(
            tv_distance(&d(&[0.5, 0.5]), &Distribution::uniform(3)),
            Err(ChainError::DimensionMismatch { .. })
        ));
    }
}
