use super::distribution::Distribution;
use super::error::{ChainError, Result};
use super::kernel::Kernel;
use crate::scalar::Scalar;

/// Returns `Err(NotIrreducible)` unless every state reaches and is reached
/// from state 0 through positive entries.
pub fn check_irreducible<S: Scalar>(kernel: &Kernel<S>) -> Result<()> {
    let k = kernel.k();
    let forward = reachable(k, |i, j| !kernel.get(i, j).is_zero());
    let backward = reachable(k, |i, j| !kernel.get(j, i).is_zero());
    match (0..k).find(|&s| !forward[s] || !backward[s]) {
        Some(unreachable) => Err(ChainError::NotIrreducible { unreachable }),
        None => Ok(()),
    }
}

fn reachable(k: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; k];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if !seen[j] && edge(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Unique stationary law of an irreducible kernel.
///
/// Solves `(P^T - I) pi = 0` with the last equation replaced by
/// `sum(pi) = 1`, by Gaussian elimination with partial pivoting. Over
/// rationals the result is exact.
pub fn stationary<S: Scalar>(kernel: &Kernel<S>) -> Result<Distribution<S>> {
    check_irreducible(kernel)?;
    let k = kernel.k();
    // Augmented system, row r holds equation r.
    let mut a: Vec<Vec<S>> = (0..k)
        .map(|r| {
            let mut eq: Vec<S> = (0..k)
                .map(|c| {
                    let v = kernel.get(c, r).clone();
                    if r == c {
                        v - S::one()
                    } else {
                        v
                    }
                })
                .collect();
            eq.push(S::zero());
            eq
        })
        .collect();
    a[k - 1] = vec![S::one(); k + 1];

    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty range");
        if a[pivot][col].is_zero() {
            return Err(ChainError::NotIrreducible { unreachable: col });
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for r in 0..k {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pivot_row[col].clone();
            for c in col..=k {
                a[r][c] = a[r][c].clone() - factor.clone() * pivot_row[c].clone();
            }
        }
    }
    let pi: Vec<S> = (0..k).map(|i| a[i][k].clone() / a[i][i].clone()).collect();
    Distribution::from_solution(pi)
}
