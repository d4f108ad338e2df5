//! Instance generators for the synthetic letter-rule task, multi-step
//! modular addition and the random families used in scaling checks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    check_local_global_consistency, ChainError, ConsistencyFailure, Distribution, Instance, Kernel, Provenance,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("rule with p = {p} and distinct targets has zero margin")]
    DegenerateRule { p: f64 },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("generated instance fails local-global consistency: {0:?}")]
    ConsistencyViolation(ConsistencyFailure),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Same,
    Diff,
}

impl Alignment {
    pub fn name(self) -> &'static str {
        match self {
            Alignment::Same => "same",
            Alignment::Diff => "diff",
        }
    }
}

/// With probability `p` move `+up`, otherwise move `-down`, modulo `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetterRule<S = f64> {
    pub p: S,
    pub up: usize,
    pub down: usize,
}

impl LetterRule<f64> {
    /// Letter `A`: `+1` with probability 0.8, else `-2`.
    pub fn letter_a() -> Self {
        Self { p: 0.8, up: 1, down: 2 }
    }

    /// Letter `B`: `+2` with probability 0.8, else `-1`.
    pub fn letter_b() -> Self {
        Self { p: 0.8, up: 2, down: 1 }
    }
}

pub fn letter_rule_kernel<S: Scalar>(rule: &LetterRule<S>, k: usize) -> Result<Kernel<S>> {
    if k < 2 {
        return Err(ChainError::TooSmall { k }.into());
    }
    if rule.p <= S::zero() || rule.p > S::one() {
        return Err(BenchError::InvalidRule(format!("p = {} must lie in (0, 1]", rule.p)));
    }
    let rows = (0..k)
        .map(|i| {
            let up = (i + rule.up) % k;
            let down = (i + k - rule.down % k) % k;
            let mut row = vec![S::zero(); k];
            if up == down {
                row[up] = S::one();
            } else {
                row[up] = rule.p.clone();
                row[down] = S::one() - rule.p.clone();
            }
            row
        })
        .collect();
    let distinct = !(rule.up + rule.down).is_multiple_of(k);
    let two = S::one() + S::one();
    if distinct && (two * rule.p.clone() - S::one()).abs() <= S::tie_tolerance() {
        return Err(BenchError::DegenerateRule { p: rule.p.to_f64_lossy() });
    }
    Ok(Kernel::new(rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
}

/// The two-letter synthetic task. Under `Diff` the letters swap rules from
/// step 2 on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig<S = f64> {
    pub k: usize,
    pub alignment: Alignment,
    pub rule_a: LetterRule<S>,
    pub rule_b: LetterRule<S>,
    /// Relation sequence `r_1..r_T`.
    pub letters: Vec<Letter>,
}

impl SyntheticConfig<f64> {
    /// `k = 10`, default letter rules, `T` copies of letter `A`.
    pub fn letter_a(alignment: Alignment, horizon: usize) -> Self {
        Self {
            k: 10,
            alignment,
            rule_a: LetterRule::letter_a(),
            rule_b: LetterRule::letter_b(),
            letters: vec![Letter::A; horizon],
        }
    }

    /// Both letters use probability `p`.
    pub fn with_p(mut self, p: f64) -> Self {
        self.rule_a.p = p;
        self.rule_b.p = p;
        self
    }
}

impl<S: Scalar> SyntheticConfig<S> {
    pub fn horizon(&self) -> usize {
        self.letters.len()
    }

    /// Rule applied at 1-based `step` for `letter`.
    pub fn rule_at(&self, step: usize, letter: Letter) -> &LetterRule<S> {
        let swapped = self.alignment == Alignment::Diff && step >= 2;
        match (letter, swapped) {
            (Letter::A, false) | (Letter::B, true) => &self.rule_a,
            (Letter::B, false) | (Letter::A, true) => &self.rule_b,
        }
    }
}

fn rule_text<S: Scalar>(r: &LetterRule<S>) -> String {
    format!("p={};up={};down={}", r.p, r.up, r.down)
}

/// Uniform start, one letter-rule kernel per step, then the local-global
/// consistency check.
pub fn build_synthetic_instance<S: Scalar>(config: &SyntheticConfig<S>) -> Result<Instance<S>> {
    if config.letters.is_empty() {
        return Err(BenchError::InvalidConfig("letters must name at least one step".into()));
    }
    let kernels = config
        .letters
        .iter()
        .enumerate()
        .map(|(t, &l)| letter_rule_kernel(config.rule_at(t + 1, l), config.k))
        .collect::<Result<Vec<_>>>()?;
    let letters: String = config.letters.iter().map(|l| format!("{l:?}")).collect();
    let provenance = Provenance::new("synthetic")
        .with("k", config.k)
        .with("alignment", config.alignment.name())
        .with("letters", letters)
        .with("rule_a", rule_text(&config.rule_a))
        .with("rule_b", rule_text(&config.rule_b));
    let instance = Instance::new(Distribution::uniform(config.k), kernels)?.with_provenance(provenance);
    let report = check_local_global_consistency(&instance);
    match report.failure {
        Some(failure) => Err(BenchError::ConsistencyViolation(failure)),
        None => Ok(instance),
    }
}

/// `x_L = x_0 + a_1 + ... + a_L (mod M)` where each addition is corrupted
/// to `a_t + 1` with probability `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModAddConfig<S = f64> {
    #[serde(rename = "M")]
    pub modulus: usize,
    pub addends: Vec<usize>,
    pub alignment: Alignment,
    pub epsilon: S,
}

impl ModAddConfig<f64> {
    pub fn new(modulus: usize, addends: Vec<usize>, alignment: Alignment) -> Self {
        Self { modulus, addends, alignment, epsilon: 0.1 }
    }
}

pub fn build_modadd_instance<S: Scalar>(config: &ModAddConfig<S>) -> Result<Instance<S>> {
    let m = config.modulus;
    if config.addends.is_empty() {
        return Err(BenchError::InvalidConfig("addends must name at least one step".into()));
    }
    let half = S::one() / (S::one() + S::one());
    if config.epsilon < S::zero() || config.epsilon >= half {
        return Err(BenchError::InvalidConfig(format!("epsilon = {} must lie in [0, 0.5)", config.epsilon)));
    }
    if config.alignment == Alignment::Same && config.addends.windows(2).any(|w| w[0] != w[1]) {
        return Err(BenchError::InvalidConfig("alignment `same` needs equal addends".into()));
    }
    if m < 2 {
        return Err(ChainError::TooSmall { k: m }.into());
    }
    let eps = config.epsilon.clone();
    let kernels = config
        .addends
        .iter()
        .map(|&a| {
            let rows = (0..m)
                .map(|i| {
                    let mut row = vec![S::zero(); m];
                    row[(i + a) % m] = S::one() - eps.clone();
                    row[(i + a + 1) % m] = row[(i + a + 1) % m].clone() + eps.clone();
                    row
                })
                .collect();
            Kernel::new(rows)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let addends = config.addends.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
    let provenance = Provenance::new("modadd")
        .with("M", m)
        .with("addends", addends)
        .with("alignment", config.alignment.name())
        .with("epsilon", &config.epsilon);
    Ok(Instance::new(Distribution::uniform(m), kernels)?.with_provenance(provenance))
}

/// Doubly stochastic kernel with margin exactly `delta`: row `i` puts
/// `(1 - delta)/k + delta` on `perm[i]` and `(1 - delta)/k` elsewhere.
pub fn permutation_mixture_kernel(perm: &[usize], delta: f64) -> Result<Kernel<f64>> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(BenchError::InvalidConfig(format!("delta = {delta} must lie in [0, 1]")));
    }
    let k = perm.len();
    let base = (1.0 - delta) / k as f64;
    let rows = perm
        .iter()
        .map(|&target| (0..k).map(|j| if j == target { base + delta } else { base }).collect())
        .collect();
    Ok(Kernel::new(rows)?)
}

/// `T` steps with a fresh uniformly random permutation each, all with local
/// margin `delta`, and uniform start. Uniform is invariant under every
/// step, so `q_min = 1/k` for all `T`.
pub fn fresh_kernel_instance(k: usize, horizon: usize, delta: f64, seed: u64) -> Result<Instance<f64>> {
    if horizon == 0 {
        return Err(BenchError::InvalidConfig("horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = (0..horizon)
        .map(|_| {
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            permutation_mixture_kernel(&perm, delta)
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::new("fresh_kernels").with("k", k).with("T", horizon).with("delta", delta).with("seed", seed);
    Ok(Instance::new(Distribution::uniform(k), kernels)?.with_provenance(provenance))
}
