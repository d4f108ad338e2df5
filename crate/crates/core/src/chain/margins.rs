use std::collections::BTreeSet;

use super::kernel::Kernel;
use crate::scalar::Scalar;

/// Gap between the largest and second-largest entry of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport<S> {
    pub per_row_margin: Vec<S>,
    pub global_margin: S,
    pub argmax_per_row: Vec<usize>,
    pub tie_rows: BTreeSet<usize>,
}

/// Row-wise hard-max map `I(i) = argmax_j P_ij`, lowest index on ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgmaxMap {
    pub map: Vec<usize>,
    pub tie_rows: BTreeSet<usize>,
}

impl ArgmaxMap {
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_tie_free(&self) -> bool {
        self.tie_rows.is_empty()
    }
}

/// Argmax and margin of a single row. Entries within the tie tolerance of
/// the maximum count as tied; a tied row has margin zero.
fn row_top<S: Scalar>(row: &[S]) -> (usize, S, bool) {
    let tol = S::tie_tolerance();
    let mut best = 0;
    for (j, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = j;
        }
    }
    // Lowest index among entries indistinguishable from the max.
    let top = row[best].clone();
    let first = row.iter().position(|v| (top.clone() - v.clone()).abs() <= tol).unwrap_or(best);
    let second = row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != best)
        .map(|(_, v)| v.clone())
        .reduce(|a, b| if b > a { b } else { a })
        .unwrap_or_else(S::zero);
    let gap = top - second;
    if gap <= tol {
        (first, S::zero(), true)
    } else {
        (best, gap, false)
    }
}

pub fn row_margins<S: Scalar>(kernel: &Kernel<S>) -> MarginReport<S> {
    let mut per_row_margin = Vec::with_capacity(kernel.k());
    let mut argmax_per_row = Vec::with_capacity(kernel.k());
    let mut tie_rows = BTreeSet::new();
    for (i, row) in kernel.rows().enumerate() {
        let (arg, gap, tied) = row_top(row);
        if tied {
            tie_rows.insert(i);
        }
        per_row_margin.push(gap);
        argmax_per_row.push(arg);
    }
    let global_margin = per_row_margin
        .iter()
        .cloned()
        .reduce(|a, b| if b < a { b } else { a })
        .expect("k >= 2");
    MarginReport { per_row_margin, global_margin, argmax_per_row, tie_rows }
}

pub fn argmax_map<S: Scalar>(kernel: &Kernel<S>) -> ArgmaxMap {
    let report = row_margins(kernel);
    ArgmaxMap { map: report.argmax_per_row, tie_rows: report.tie_rows }
}
