use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::error::{Result, SamplingError};
use crate::chain::Instance;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Cot,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Direct => "direct",
            Mode::Cot => "cot",
        })
    }
}

/// A full sampled path `x_0, ..., x_T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trajectory {
    states: Vec<usize>,
}

impl Trajectory {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.states[0]
    }

    pub fn terminal(&self) -> usize {
        *self.states.last().expect("trajectory is nonempty")
    }

    /// Number of transitions `T`.
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

/// A direct-inference record: the start and the answer, nothing between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EndpointPair {
    pub x0: usize,
    pub xt: usize,
}

/// Identification shared by both dataset kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub instance_digest: String,
    pub seed: u64,
    pub k: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectDataset {
    pub(crate) meta: DatasetMeta,
    pub(crate) records: Vec<EndpointPair>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CotDataset {
    pub(crate) meta: DatasetMeta,
    pub(crate) records: Vec<Trajectory>,
    /// Whether the generating instance had identical kernels at every step.
    pub(crate) homogeneous: bool,
}

fn check_state(record: usize, x: usize, k: usize) -> Result<()> {
    if x >= k {
        return Err(SamplingError::InvalidRecord { record, reason: format!("state {x} out of range for k={k}") });
    }
    Ok(())
}

impl DirectDataset {
    /// Builds a dataset from hand-made records, checking state ranges.
    pub fn from_records(meta: DatasetMeta, records: Vec<EndpointPair>) -> Result<Self> {
        if records.is_empty() {
            return Err(SamplingError::EmptyDataset);
        }
        for (i, r) in records.iter().enumerate() {
            check_state(i, r.x0, meta.k)?;
            check_state(i, r.xt, meta.k)?;
        }
        Ok(Self { meta, records })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn records(&self) -> &[EndpointPair] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl CotDataset {
    /// Builds a dataset from hand-made paths, checking lengths and ranges.
    pub fn from_records(meta: DatasetMeta, records: Vec<Trajectory>, homogeneous: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(SamplingError::EmptyDataset);
        }
        for (i, t) in records.iter().enumerate() {
            if t.states().len() != meta.horizon + 1 {
                return Err(SamplingError::InvalidRecord { record: i, reason: "path length is not T+1".into() });
            }
            for &x in t.states() {
                check_state(i, x, meta.k)?;
            }
        }
        Ok(Self { meta, records, homogeneous })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn records(&self) -> &[Trajectory] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Forgets the intermediate states.
    pub fn to_direct(&self) -> DirectDataset {
        DirectDataset {
            meta: self.meta.clone(),
            records: self.records.iter().map(|t| EndpointPair { x0: t.initial(), xt: t.terminal() }).collect(),
        }
    }
}

/// `n` context samples in one of the two observation modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextDataset {
    Direct(DirectDataset),
    Cot(CotDataset),
}

impl ContextDataset {
    pub fn mode(&self) -> Mode {
        match self {
            ContextDataset::Direct(_) => Mode::Direct,
            ContextDataset::Cot(_) => Mode::Cot,
        }
    }

    pub fn meta(&self) -> &DatasetMeta {
        match self {
            ContextDataset::Direct(d) => &d.meta,
            ContextDataset::Cot(d) => &d.meta,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ContextDataset::Direct(d) => d.len(),
            ContextDataset::Cot(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_direct(&self) -> Result<&DirectDataset> {
        match self {
            ContextDataset::Direct(d) => Ok(d),
            ContextDataset::Cot(_) => Err(SamplingError::ModeMismatch { expected: Mode::Direct, found: Mode::Cot }),
        }
    }

    pub fn as_cot(&self) -> Result<&CotDataset> {
        match self {
            ContextDataset::Cot(d) => Ok(d),
            ContextDataset::Direct(_) => Err(SamplingError::ModeMismatch { expected: Mode::Cot, found: Mode::Direct }),
        }
    }
}

/// Random stream for record `record_index` of a dataset drawn with `seed`.
///
/// The ChaCha key is the seed and the stream id is the record index, so each
/// record has its own independent sequence and generation order is
/// irrelevant.
pub fn record_stream(seed: u64, record_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record_index);
    rng
}

/// Inverse-CDF tables for an instance, built once and reused across records.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    k: usize,
    mu_cdf: Vec<f64>,
    /// `step_cdfs[t][i * k + j]` is `P(t+1)_{i0} + ... + P(t+1)_{ij}`.
    step_cdfs: Vec<Vec<f64>>,
}

impl TrajectorySampler {
    pub fn new<S: Scalar>(instance: &Instance<S>) -> Self {
        let k = instance.k();
        let mu_cdf = cumulative(instance.mu().weights());
        let step_cdfs = instance
            .kernels()
            .iter()
            .map(|p| p.rows().flat_map(cumulative).collect())
            .collect();
        Self { k, mu_cdf, step_cdfs }
    }

    pub fn horizon(&self) -> usize {
        self.step_cdfs.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory {
        let mut states = Vec::with_capacity(self.horizon() + 1);
        let mut x = invert(&self.mu_cdf, rng.random());
        states.push(x);
        for cdf in &self.step_cdfs {
            x = invert(&cdf[x * self.k..(x + 1) * self.k], rng.random());
            states.push(x);
        }
        Trajectory { states }
    }
}

/// Cumulative sums with the tail pinned to exactly 1 from the last
/// positive entry on, so rounding can never select a zero-mass state.
fn cumulative<S: Scalar>(weights: &[S]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w.to_f64_lossy();
            acc
        })
        .collect();
    let last_positive = weights.iter().rposition(|w| !w.is_zero()).unwrap_or(weights.len() - 1);
    for c in &mut cdf[last_positive..] {
        *c = 1.0;
    }
    cdf
}

fn invert(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// One trajectory drawn from `instance` using `rng`.
pub fn sample_trajectory<S: Scalar, R: Rng + ?Sized>(instance: &Instance<S>, rng: &mut R) -> Trajectory {
    TrajectorySampler::new(instance).sample(rng)
}

fn meta<S: Scalar>(instance: &Instance<S>, seed: u64) -> DatasetMeta {
    DatasetMeta { instance_digest: instance.digest(), seed, k: instance.k(), horizon: instance.horizon() }
}

const PARALLEL_RECORDS: usize = 4096;

fn sample_paths(sampler: &TrajectorySampler, n: usize, seed: u64) -> Vec<Trajectory> {
    let draw = |i: u64| sampler.sample(&mut record_stream(seed, i));
    if n >= PARALLEL_RECORDS {
        (0..n as u64).into_par_iter().map(draw).collect()
    } else {
        (0..n as u64).map(draw).collect()
    }
}

/// `n` full trajectories. Record `i` uses [`record_stream`]`(seed, i)`.
pub fn sample_cot<S: Scalar>(instance: &Instance<S>, n: usize, seed: u64) -> Result<CotDataset> {
    if n == 0 {
        return Err(SamplingError::EmptyDataset);
    }
    let sampler = TrajectorySampler::new(instance);
    Ok(CotDataset {
        meta: meta(instance, seed),
        records: sample_paths(&sampler, n, seed),
        homogeneous: instance.is_homogeneous(),
    })
}

/// `n` endpoint pairs. The same streams as [`sample_cot`] are used, so the
/// endpoints agree with the CoT dataset drawn from the same seed.
pub fn sample_direct<S: Scalar>(instance: &Instance<S>, n: usize, seed: u64) -> Result<DirectDataset> {
    if n == 0 {
        return Err(SamplingError::EmptyDataset);
    }
    let sampler = TrajectorySampler::new(instance);
    let records = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = sampler.sample(&mut record_stream(seed, i));
            EndpointPair { x0: t.initial(), xt: t.terminal() }
        })
        .collect();
    Ok(DirectDataset { meta: meta(instance, seed), records })
}

pub fn sample_dataset<S: Scalar>(instance: &Instance<S>, n: usize, mode: Mode, seed: u64) -> Result<ContextDataset> {
    Ok(match mode {
        Mode::Direct => ContextDataset::Direct(sample_direct(instance, n, seed)?),
        Mode::Cot => ContextDataset::Cot(sample_cot(instance, n, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Distribution, Kernel};

    fn cycle3(t: usize) -> Instance<f64> {
        let p = Kernel::from_permutation(&[1, 2, 0]).unwrap();
        Instance::homogeneous(Distribution::point_mass(3, 0), p, t).unwrap()
    }

    #[test]
    fn deterministic_cycle_path() {
        let mut rng = record_stream(7, 0);
        assert_eq!(sample_trajectory(&cycle3(2), &mut rng).states(), &[0, 1, 2]);
    }

    #[test]
    fn identity_kernels_stay_put() {
        let inst = Instance::homogeneous(Distribution::uniform(4), Kernel::<f64>::identity(4).unwrap(), 5).unwrap();
        let data = sample_cot(&inst, 50, 3).unwrap();
        for t in data.records() {
            assert!(t.states().iter().all(|&s| s == t.initial()));
        }
    }

    #[test]
    fn zero_mass_states_never_drawn() {
        let p = Kernel::new(vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.0, 1.0]]).unwrap();
        let inst = Instance::homogeneous(Distribution::new(vec![0.0, 1.0, 0.0]).unwrap(), p, 3).unwrap();
        for t in sample_cot(&inst, 500, 11).unwrap().records() {
            assert_eq!(t.initial(), 1);
            assert_ne!(t.states()[1], 1);
        }
    }

    #[test]
    fn direct_and_cot_share_endpoints() {
        let p = Kernel::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let inst = Instance::homogeneous(Distribution::uniform(2), p, 4).unwrap();
        let cot = sample_cot(&inst, 100, 5).unwrap();
        let direct = sample_direct(&inst, 100, 5).unwrap();
        assert_eq!(cot.to_direct(), direct);
    }

    #[test]
    fn mode_accessors() {
        let data = sample_dataset(&cycle3(2), 3, Mode::Direct, 1).unwrap();
        assert_eq!(data.mode(), Mode::Direct);
        assert!(matches!(data.as_cot(), Err(SamplingError::ModeMismatch { .. })));
        assert!(matches!(sample_dataset(&cycle3(2), 0, Mode::Cot, 1), Err(SamplingError::EmptyDataset)));
    }
}
