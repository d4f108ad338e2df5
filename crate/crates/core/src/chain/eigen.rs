//! Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices.

use super::error::{ChainError, Result};
use crate::scalar::Real;

pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the symmetric `n x n` row-major matrix `a`, sorted in
/// descending order. Only the upper triangle is read.
pub fn symmetric_eigenvalues<S: Real>(a: &[S], n: usize) -> Result<Vec<S>> {
    if a.len() != n * n {
        return Err(ChainError::DimensionMismatch { expected: n * n, found: a.len() });
    }
    let mut m = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    let frob: S = m.iter().fold(S::zero(), |acc, &v| acc + v * v).sqrt();
    let threshold = S::epsilon() * frob.max(S::min_positive_value());

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: S = off_diagonal_norm(&m, n);
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, n, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m, n) > threshold {
        return Err(ChainError::EigensolverFailure { sweeps: MAX_SWEEPS });
    }
    let mut values: Vec<S> = (0..n).map(|i| m[i * n + i]).collect();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(values)
}

fn off_diagonal_norm<S: Real>(m: &[S], n: usize) -> S {
    let mut sum = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum = sum + m[i * n + j] * m[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing `m[p][q]`.
fn rotate<S: Real>(m: &mut [S], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == S::zero() {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let two = S::one() + S::one();
    let theta = (aqq - app) / (two * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
    let c = S::one() / (t * t + S::one()).sqrt();
    let s = t * c;

    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = c * mkp - s * mkq;
        m[k * n + q] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = c * mpk - s * mqk;
        m[q * n + k] = s * mpk + c * mqk;
    }
}
