//! Count-and-argmax estimators and their evaluation against ground truth.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{argmax_map, Instance};
use crate::sampling::{count_cot, count_direct, CotDataset, CountTensor, DirectDataset, Mode, SamplingError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("homogeneous pooling needs data from an instance with identical kernels at every step")]
    HomogeneityMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Direct,
    CotHomogeneous,
    CotHeterogeneous,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] =
        [EstimatorKind::Direct, EstimatorKind::CotHomogeneous, EstimatorKind::CotHeterogeneous];

    pub fn mode(self) -> Mode {
        match self {
            EstimatorKind::Direct => Mode::Direct,
            _ => Mode::Cot,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Direct => "direct",
            EstimatorKind::CotHomogeneous => "cot_homogeneous",
            EstimatorKind::CotHeterogeneous => "cot_heterogeneous",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimated end-to-end answer `j_hat(i)` for every start state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMap {
    pub predicted: Vec<Option<usize>>,
    pub undefined_rows: BTreeSet<usize>,
    pub tie_rows: BTreeSet<usize>,
    pub kind: EstimatorKind,
}

/// Audit record for one row of a [`PredictionMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub i: usize,
    pub j_hat: Option<usize>,
    pub undefined: bool,
    pub tie: bool,
}

impl PredictionMap {
    pub fn k(&self) -> usize {
        self.predicted.len()
    }

    pub fn records(&self) -> Vec<PredictionRecord> {
        self.predicted
            .iter()
            .enumerate()
            .map(|(i, j)| PredictionRecord {
                i,
                j_hat: *j,
                undefined: self.undefined_rows.contains(&i),
                tie: self.tie_rows.contains(&i),
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Argmax of one count row: `None` if the row is empty, lowest index on
/// ties, and whether a tie occurred.
fn count_argmax(row: &[u64]) -> (Option<usize>, bool) {
    let max = *row.iter().max().expect("k >= 2");
    if max == 0 {
        return (None, false);
    }
    let first = row.iter().position(|&c| c == max).expect("max is present");
    let tied = row.iter().filter(|&&c| c == max).count() > 1;
    (Some(first), tied)
}

/// Row-wise empirical argmax of a flat `k x k` count matrix.
struct LocalMap {
    map: Vec<Option<usize>>,
    ties: Vec<bool>,
}

fn local_map(counts: &[u64], k: usize) -> LocalMap {
    let (map, ties) = counts.chunks(k).map(count_argmax).unzip();
    LocalMap { map, ties }
}

/// Follows local maps in order; undefined as soon as an unobserved row is hit.
fn compose_local(maps: &[&LocalMap], k: usize, kind: EstimatorKind) -> PredictionMap {
    let mut out = PredictionMap {
        predicted: Vec::with_capacity(k),
        undefined_rows: BTreeSet::new(),
        tie_rows: BTreeSet::new(),
        kind,
    };
    for i in 0..k {
        let mut x = Some(i);
        let mut tie = false;
        for m in maps {
            let Some(cur) = x else { break };
            tie |= m.ties[cur];
            x = m.map[cur];
        }
        if x.is_none() {
            out.undefined_rows.insert(i);
        } else if tie {
            out.tie_rows.insert(i);
        }
        out.predicted.push(x);
    }
    out
}

/// Direct estimator from `(x_0, x_T)` tallies.
pub fn direct_from_counts(counts: &CountTensor) -> PredictionMap {
    let k = counts.k();
    let local = local_map(counts.terminal_pairs(), k);
    compose_local(&[&local], k, EstimatorKind::Direct)
}

/// Homogeneous CoT estimator from pooled per-step tallies. The caller is
/// responsible for the homogeneity of the source.
pub fn cot_homogeneous_from_counts(counts: &CountTensor) -> Result<PredictionMap> {
    let k = counts.k();
    let local = local_map(&counts.pooled_transitions()?, k);
    let maps = vec![&local; counts.horizon()];
    Ok(compose_local(&maps, k, EstimatorKind::CotHomogeneous))
}

pub fn cot_heterogeneous_from_counts(counts: &CountTensor) -> Result<PredictionMap> {
    let k = counts.k();
    let locals: Vec<LocalMap> = counts.per_step_counts()?.iter().map(|c| local_map(c, k)).collect();
    let maps: Vec<&LocalMap> = locals.iter().collect();
    Ok(compose_local(&maps, k, EstimatorKind::CotHeterogeneous))
}

/// For each start `i` with data, the most frequent observed `x_T`.
pub fn estimate_direct(data: &DirectDataset) -> PredictionMap {
    direct_from_counts(&count_direct(data))
}

/// Pools all `T` transitions of every trajectory into one kernel estimate
/// and applies its argmax map `T` times.
pub fn estimate_cot_homogeneous(data: &CotDataset) -> Result<PredictionMap> {
    if !data.is_homogeneous() {
        return Err(EstimatorError::HomogeneityMismatch);
    }
    cot_homogeneous_from_counts(&count_cot(data))
}

/// Composes the per-step empirical argmax maps.
pub fn estimate_cot_heterogeneous(data: &CotDataset) -> Result<PredictionMap> {
    cot_heterogeneous_from_counts(&count_cot(data))
}

/// How a row with no data is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedPolicy {
    /// An unanswerable row is wrong.
    #[default]
    Incorrect,
    /// An unanswerable row earns the `1/k` credit of a uniform guess.
    UniformGuess,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub all_rows_correct: bool,
    pub per_row_correct: Vec<bool>,
    /// `sum_i mu_i 1{row i correct}`.
    pub query_accuracy: f64,
}

pub fn evaluate<S: Scalar>(prediction: &PredictionMap, instance: &Instance<S>) -> Result<EvalResult> {
    evaluate_with_policy(prediction, instance, UndefinedPolicy::Incorrect)
}

pub fn evaluate_with_policy<S: Scalar>(
    prediction: &PredictionMap,
    instance: &Instance<S>,
    policy: UndefinedPolicy,
) -> Result<EvalResult> {
    let truth = argmax_map(&instance.end_to_end());
    evaluate_against(prediction, &truth.map, instance.mu().weights(), policy)
}

/// Scores against a precomputed truth map and weights; used by the sweep
/// harness to avoid recomposing `Q` per replicate.
pub fn evaluate_against<S: Scalar>(
    prediction: &PredictionMap,
    truth: &[usize],
    mu: &[S],
    policy: UndefinedPolicy,
) -> Result<EvalResult> {
    let k = truth.len();
    if prediction.k() != k {
        return Err(EstimatorError::DimensionMismatch { expected: k, found: prediction.k() });
    }
    let per_row_correct: Vec<bool> = prediction.predicted.iter().zip(truth).map(|(p, t)| *p == Some(*t)).collect();
    let mut query_accuracy = 0.0;
    for (i, w) in mu.iter().enumerate() {
        let w = w.to_f64_lossy();
        if per_row_correct[i] {
            query_accuracy += w;
        } else if prediction.predicted[i].is_none() && policy == UndefinedPolicy::UniformGuess {
            query_accuracy += w / k as f64;
        }
    }
    let all_rows_correct = prediction.undefined_rows.is_empty() && per_row_correct.iter().all(|&c| c);
    Ok(EvalResult { all_rows_correct, per_row_correct, query_accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Distribution, Kernel};
    use crate::sampling::{sample_cot, DatasetMeta, EndpointPair, Trajectory};

    fn meta(k: usize, horizon: usize) -> DatasetMeta {
        DatasetMeta { instance_digest: String::new(), seed: 0, k, horizon }
    }

    #[test]
    fn direct_hand_count() {
        let pairs = [(0, 1), (0, 1), (0, 0)].map(|(x0, xt)| EndpointPair { x0, xt });
        let data = DirectDataset { meta: meta(2, 1), records: pairs.to_vec() };
        let pred = estimate_direct(&data);
        assert_eq!(pred.predicted, vec![Some(1), None]);
        assert_eq!(pred.undefined_rows, BTreeSet::from([1]));
        assert!(pred.tie_rows.is_empty());
    }

    #[test]
    fn direct_tie_is_flagged_and_lowest() {
        let pairs = [(0, 1), (0, 0), (1, 1)].map(|(x0, xt)| EndpointPair { x0, xt });
        let pred = estimate_direct(&DirectDataset { meta: meta(2, 1), records: pairs.to_vec() });
        assert_eq!(pred.predicted, vec![Some(0), Some(1)]);
        assert_eq!(pred.tie_rows, BTreeSet::from([0]));
    }

    #[test]
    fn homogeneous_cycle_from_one_path() {
        let data = CotDataset { meta: meta(3, 3), records: vec![Trajectory::new(vec![0, 1, 2, 0])], homogeneous: true };
        let pred = estimate_cot_homogeneous(&data).unwrap();
        assert_eq!(pred.predicted, vec![Some(0), Some(1), Some(2)]);
        let inst = Instance::homogeneous(
            Distribution::uniform(3),
            Kernel::<f64>::from_permutation(&[1, 2, 0]).unwrap(),
            3,
        )
        .unwrap();
        let eval = evaluate(&pred, &inst).unwrap();
        assert!(eval.all_rows_correct);
        assert_eq!(eval.query_accuracy, 1.0);
    }

    #[test]
    fn homogeneous_rejects_heterogeneous_source() {
        let data = CotDataset { meta: meta(2, 2), records: vec![Trajectory::new(vec![0, 1, 0])], homogeneous: false };
        assert!(matches!(estimate_cot_homogeneous(&data), Err(EstimatorError::HomogeneityMismatch)));
    }

    #[test]
    fn identity_chain_leaves_unseen_rows_undefined() {
        let inst = Instance::homogeneous(Distribution::new(vec![0.5, 0.5, 0.0]).unwrap(), Kernel::<f64>::identity(3).unwrap(), 4)
            .unwrap();
        let pred = estimate_cot_homogeneous(&sample_cot(&inst, 40, 2).unwrap()).unwrap();
        assert_eq!(pred.undefined_rows, BTreeSet::from([2]));
        assert_eq!(pred.predicted[..2], [Some(0), Some(1)]);
    }

    #[test]
    fn heterogeneous_composes_per_step_maps() {
        let records = vec![Trajectory::new(vec![0, 1, 0]), Trajectory::new(vec![1, 0, 1])];
        let data = CotDataset { meta: meta(2, 2), records, homogeneous: false };
        let pred = estimate_cot_heterogeneous(&data).unwrap();
        assert_eq!(pred.predicted, vec![Some(0), Some(1)]);
        // Row 1 of the second step is never observed.
        let data = CotDataset { meta: meta(2, 2), records: vec![Trajectory::new(vec![0, 1, 0])], homogeneous: false };
        let pred = estimate_cot_heterogeneous(&data).unwrap();
        assert_eq!(pred.predicted, vec![Some(0), None]);
    }

    fn uniform4() -> Instance<f64> {
        Instance::homogeneous(Distribution::uniform(4), Kernel::from_permutation(&[1, 2, 3, 0]).unwrap(), 1).unwrap()
    }

    #[test]
    fn query_accuracy_weights() {
        let mut pred = PredictionMap {
            predicted: vec![Some(1), Some(2), Some(3), Some(0)],
            undefined_rows: BTreeSet::new(),
            tie_rows: BTreeSet::new(),
            kind: EstimatorKind::Direct,
        };
        assert!(evaluate(&pred, &uniform4()).unwrap().all_rows_correct);
        pred.predicted[2] = Some(0);
        let eval = evaluate(&pred, &uniform4()).unwrap();
        assert!(!eval.all_rows_correct);
        assert_eq!(eval.query_accuracy, 0.75);
    }

    #[test]
    fn undefined_row_costs_its_mass() {
        let mu = Distribution::new(vec![0.1, 0.3, 0.6]).unwrap();
        let inst = Instance::homogeneous(mu, Kernel::<f64>::identity(3).unwrap(), 1).unwrap();
        let pred = PredictionMap {
            predicted: vec![None, Some(1), Some(2)],
            undefined_rows: BTreeSet::from([0]),
            tie_rows: BTreeSet::new(),
            kind: EstimatorKind::Direct,
        };
        let eval = evaluate(&pred, &inst).unwrap();
        assert!((eval.query_accuracy - 0.9).abs() < 1e-15);
        assert!(!eval.all_rows_correct);
        let guess = evaluate_with_policy(&pred, &inst, UndefinedPolicy::UniformGuess).unwrap();
        assert!((guess.query_accuracy - (0.9 + 0.1 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let pred = PredictionMap {
            predicted: vec![Some(0), Some(1)],
            undefined_rows: BTreeSet::new(),
            tie_rows: BTreeSet::new(),
            kind: EstimatorKind::Direct,
        };
        assert!(matches!(evaluate(&pred, &uniform4()), Err(EstimatorError::DimensionMismatch { .. })));
    }

    #[test]
    fn prediction_records_export() {
        let pred = PredictionMap {
            predicted: vec![None, Some(1)],
            undefined_rows: BTreeSet::from([0]),
            tie_rows: BTreeSet::from([1]),
            kind: EstimatorKind::CotHeterogeneous,
        };
        let mut buf = Vec::new();
        pred.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"i\":0,\"j_hat\":null,\"undefined\":true,\"tie\":false}\n{\"i\":1,\"j_hat\":1,\"undefined\":false,\"tie\":true}\n"
        );
    }
}
