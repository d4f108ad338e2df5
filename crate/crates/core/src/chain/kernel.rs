use std::fmt;

use super::distribution::Distribution;
use super::error::{ChainError, Result};
use crate::scalar::Scalar;

/// A `k x k` row-stochastic transition matrix, stored row-major.
///
/// Row `i` is the law of the next state given the current state `i`.
#[derive(Clone, PartialEq)]
pub struct Kernel<S> {
    k: usize,
    entries: Vec<S>,
}

impl<S: Scalar> Kernel<S> {
    /// Validates `rows` with the scalar's default tolerance.
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        Self::validate(rows, &S::stochastic_tolerance())
    }

    /// Checks shape, sign and row sums. Rows off by more than `tolerance`
    /// are rejected; smaller deviations above rounding level are renormalized.
    pub fn validate(rows: Vec<Vec<S>>, tolerance: &S) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(ChainError::TooSmall { k });
        }
        let mut entries = Vec::with_capacity(k * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(ChainError::NotSquare { row: i, len: row.len(), k });
            }
            let normalized = normalize_row(row, i, tolerance)?;
            entries.extend(normalized);
        }
        Ok(Self { k, entries })
    }

    pub fn identity(k: usize) -> Result<Self> {
        let perm: Vec<usize> = (0..k).collect();
        Self::from_permutation(&perm)
    }

    /// Deterministic kernel sending `i` to `perm[i]`. `perm` need not be a
    /// bijection; any map `[k] -> [k]` gives a valid kernel.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let k = perm.len();
        if k < 2 {
            return Err(ChainError::TooSmall { k });
        }
        let mut entries = vec![S::zero(); k * k];
        for (i, &j) in perm.iter().enumerate() {
            if j >= k {
                return Err(ChainError::DimensionMismatch { expected: k, found: j + 1 });
            }
            entries[i * k + j] = S::one();
        }
        Ok(Self { k, entries })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.entries.chunks(self.k)
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// The product `self * other`.
    pub fn then(&self, other: &Kernel<S>) -> Result<Kernel<S>> {
        if self.k != other.k {
            return Err(ChainError::DimensionMismatch { expected: self.k, found: other.k });
        }
        let product = mat_mul(&self.entries, &other.entries, self.k);
        Self::validate(chunk_rows(product, self.k), &S::stochastic_tolerance())
    }

    /// `self` raised to the `m`-th power (`m = 0` gives the identity).
    pub fn power(&self, m: usize) -> Kernel<S> {
        let mut acc = Self::identity(self.k).expect("k >= 2");
        for _ in 0..m {
            acc = acc.then(self).expect("same dimension");
        }
        acc
    }

    /// Pushes a row distribution forward one step: `mu P`.
    pub fn push_forward(&self, mu: &Distribution<S>) -> Result<Distribution<S>> {
        if mu.len() != self.k {
            return Err(ChainError::DimensionMismatch { expected: self.k, found: mu.len() });
        }
        let mut out = vec![S::zero(); self.k];
        for (i, w) in mu.weights().iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o = o.clone() + w.clone() * p.clone();
            }
        }
        Distribution::new(out)
    }

    /// Entrywise equality within `tolerance`.
    pub fn approx_eq(&self, other: &Kernel<S>, tolerance: &S) -> bool {
        self.k == other.k
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| (a.clone() - b.clone()).abs() <= *tolerance)
    }

    /// Whether every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rows().all(|r| r.iter().filter(|v| !v.is_zero()).count() == 1)
    }

    pub(crate) fn entries(&self) -> &[S] {
        &self.entries
    }
}

/// Ordered product `P1 P2 ... PT` of a nonempty kernel list.
pub fn compose<S: Scalar>(kernels: &[Kernel<S>]) -> Result<Kernel<S>> {
    let (first, rest) = kernels.split_first().ok_or(ChainError::EmptyKernelList)?;
    rest.iter().try_fold(first.clone(), |acc, next| acc.then(next))
}

pub(crate) fn mat_mul<S: Scalar>(a: &[S], b: &[S], k: usize) -> Vec<S> {
    let mut out = vec![S::zero(); k * k];
    for i in 0..k {
        for l in 0..k {
            let a_il = &a[i * k + l];
            if a_il.is_zero() {
                continue;
            }
            for j in 0..k {
                let prod = a_il.clone() * b[l * k + j].clone();
                out[i * k + j] = out[i * k + j].clone() + prod;
            }
        }
    }
    out
}

fn chunk_rows<S: Clone>(flat: Vec<S>, k: usize) -> Vec<Vec<S>> {
    flat.chunks(k).map(|c| c.to_vec()).collect()
}

fn normalize_row<S: Scalar>(row: Vec<S>, index: usize, tolerance: &S) -> Result<Vec<S>> {
    if let Some((col, v)) = row.iter().enumerate().find(|(_, v)| **v < S::zero()) {
        return Err(ChainError::NegativeEntry { row: index, col, value: v.to_f64_lossy() });
    }
    let sum = row.iter().cloned().fold(S::zero(), |a, b| a + b);
    let deviation = (sum.clone() - S::one()).abs();
    if deviation > *tolerance {
        return Err(ChainError::RowSumOutOfTolerance { row: index, sum: sum.to_f64_lossy() });
    }
    if deviation <= S::tie_tolerance() {
        Ok(row)
    } else {
        Ok(row.into_iter().map(|v| v / sum.clone()).collect())
    }
}

impl<S: fmt::Debug> fmt::Debug for Kernel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.chunks(self.k)).finish()
    }
}

impl<S: Scalar> fmt::Display for Kernel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn k64(rows: &[&[f64]]) -> Kernel<f64> {
        Kernel::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn validate_accepts_two_step_kernel() {
        let p = k64(&[&[0.6, 0.4], &[0.1, 0.9]]);
        assert_eq!(p.k(), 2);
        assert_eq!(*p.get(1, 1), 0.9);
    }

    #[test]
    fn validate_accepts_identity() {
        let id = Kernel::<f64>::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id, Kernel::identity(2).unwrap());
    }

    #[test]
    fn validate_rejects_bad_row_sum() {
        let err = Kernel::validate(vec![vec![0.5, 0.6], vec![0.5, 0.5]], &1e-9).unwrap_err();
        assert!(matches!(err, ChainError::RowSumOutOfTolerance { row: 0, .. }));
    }

    #[test]
    fn validate_rejects_negative_and_small() {
        let err = Kernel::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, ChainError::NegativeEntry { row: 0, col: 1, .. }));
        let err = Kernel::<f64>::new(vec![vec![1.0]]).unwrap_err();
        assert_eq!(err, ChainError::TooSmall { k: 1 });
        let err = Kernel::<f64>::new(vec![vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, ChainError::NotSquare { row: 1, .. }));
    }

    #[test]
    fn validate_renormalizes_within_tolerance() {
        let p = Kernel::validate(vec![vec![0.5, 0.5 + 1e-10], vec![0.5, 0.5]], &1e-9).unwrap();
        let sum: f64 = p.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compose_margin_pairs_by_hand() {
        let q = compose(&[k64(&[&[0.6, 0.4], &[0.1, 0.9]]), k64(&[&[0.9, 0.1], &[0.3, 0.7]])]).unwrap();
        // 0.6*0.9 + 0.4*0.3 = 0.66, 0.1*0.9 + 0.9*0.3 = 0.36
        let expected = [[0.66, 0.34], [0.36, 0.64]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.get(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
        let q = compose(&[k64(&[&[0.8, 0.2], &[0.8, 0.2]]), k64(&[&[0.7, 0.3], &[0.3, 0.7]])]).unwrap();
        let expected = [[0.62, 0.38], [0.62, 0.38]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.get(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compose_is_exact_over_rationals() {
        let p1 = Kernel::new(vec![vec![ratio(3, 5), ratio(2, 5)], vec![ratio(1, 10), ratio(9, 10)]]).unwrap();
        let p2 = Kernel::new(vec![vec![ratio(9, 10), ratio(1, 10)], vec![ratio(3, 10), ratio(7, 10)]]).unwrap();
        let q = compose(&[p1, p2]).unwrap();
        let expected: Vec<Vec<BigRational>> =
            vec![vec![ratio(33, 50), ratio(17, 50)], vec![ratio(9, 25), ratio(16, 25)]];
        assert_eq!(q.to_rows(), expected);
    }

    #[test]
    fn identity_is_neutral() {
        let p = k64(&[&[0.2, 0.8], &[0.55, 0.45]]);
        let id = Kernel::identity(2).unwrap();
        assert_eq!(compose(&[id.clone(), p.clone()]).unwrap(), p);
        assert_eq!(compose(&[p.clone(), id]).unwrap(), p);
    }

    #[test]
    fn compose_errors() {
        assert_eq!(compose::<f64>(&[]).unwrap_err(), ChainError::EmptyKernelList);
        let a = Kernel::<f64>::identity(2).unwrap();
        let b = Kernel::<f64>::identity(3).unwrap();
        assert!(matches!(compose(&[a, b]), Err(ChainError::DimensionMismatch { .. })));
    }

    #[test]
    fn push_forward_and_power() {
        let p = k64(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let pi = Distribution::new(vec![0.75, 0.25]).unwrap();
        let next = p.push_forward(&pi).unwrap();
        assert!((next.weights()[0] - 0.75).abs() < 1e-12);
        let p3 = p.power(3);
        let manual = compose(&[p.clone(), p.clone(), p]).unwrap();
        assert!(p3.approx_eq(&manual, &1e-14));
    }
}
