use super::dataset::{ContextDataset, CotDataset, DirectDataset, Mode};
use super::error::{Result, SamplingError};

/// Per-step tallies, available only for CoT data.
#[derive(Debug, Clone, PartialEq, Eq)]
struct StepCounts {
    /// `transitions[t][i * k + j]` counts `x_t = i, x_{t+1} = j`.
    transitions: Vec<Vec<u64>>,
    /// `visits[t][i]` is `N_i(t)` for `t = 0..=T`.
    visits: Vec<Vec<u64>>,
}

/// Exact tallies of a dataset. Matrices are flat row-major `k x k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTensor {
    k: usize,
    horizon: usize,
    n: u64,
    initial_counts: Vec<u64>,
    terminal_pairs: Vec<u64>,
    steps: Option<StepCounts>,
}

impl CountTensor {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mode(&self) -> Mode {
        if self.steps.is_some() {
            Mode::Cot
        } else {
            Mode::Direct
        }
    }

    /// `N_i(0)`.
    pub fn initial_counts(&self) -> &[u64] {
        &self.initial_counts
    }

    /// Counts of `(x_0, x_T)` pairs.
    pub fn terminal_pairs(&self) -> &[u64] {
        &self.terminal_pairs
    }

    fn steps(&self) -> Result<&StepCounts> {
        self.steps.as_ref().ok_or(SamplingError::ModeMismatch { expected: Mode::Cot, found: Mode::Direct })
    }

    /// `C(t)` for `t = 0..T-1`.
    pub fn per_step_counts(&self) -> Result<&[Vec<u64>]> {
        Ok(&self.steps()?.transitions)
    }

    /// `N_i(t)` for `t = 0..=T`.
    pub fn visit_counts(&self) -> Result<&[Vec<u64>]> {
        Ok(&self.steps()?.visits)
    }

    /// `N_i = sum_{t < T} N_i(t)`.
    pub fn pooled_visits(&self) -> Result<Vec<u64>> {
        let steps = self.steps()?;
        Ok(sum_vectors(&steps.visits[..self.horizon], self.k))
    }

    /// `sum_t C(t)`.
    pub fn pooled_transitions(&self) -> Result<Vec<u64>> {
        Ok(sum_vectors(&self.steps()?.transitions, self.k * self.k))
    }
}

fn sum_vectors(parts: &[Vec<u64>], len: usize) -> Vec<u64> {
    let mut out = vec![0; len];
    for part in parts {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    out
}

pub fn count_direct(data: &DirectDataset) -> CountTensor {
    let k = data.meta.k;
    let mut initial_counts = vec![0; k];
    let mut terminal_pairs = vec![0; k * k];
    for r in &data.records {
        initial_counts[r.x0] += 1;
        terminal_pairs[r.x0 * k + r.xt] += 1;
    }
    CountTensor {
        k,
        horizon: data.meta.horizon,
        n: data.records.len() as u64,
        initial_counts,
        terminal_pairs,
        steps: None,
    }
}

pub fn count_cot(data: &CotDataset) -> CountTensor {
    let k = data.meta.k;
    let horizon = data.meta.horizon;
    let mut transitions = vec![vec![0; k * k]; horizon];
    let mut visits = vec![vec![0; k]; horizon + 1];
    let mut terminal_pairs = vec![0; k * k];
    for path in &data.records {
        let s = path.states();
        for (t, &x) in s.iter().enumerate() {
            visits[t][x] += 1;
        }
        for (t, w) in s.windows(2).enumerate() {
            transitions[t][w[0] * k + w[1]] += 1;
        }
        terminal_pairs[path.initial() * k + path.terminal()] += 1;
    }
    CountTensor {
        k,
        horizon,
        n: data.records.len() as u64,
        initial_counts: visits[0].clone(),
        terminal_pairs,
        steps: Some(StepCounts { transitions, visits }),
    }
}

pub fn count(data: &ContextDataset) -> CountTensor {
    match data {
        ContextDataset::Direct(d) => count_direct(d),
        ContextDataset::Cot(d) => count_cot(d),
    }
}
