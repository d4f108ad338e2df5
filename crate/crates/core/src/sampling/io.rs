//! Line-delimited JSON export of datasets.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::dataset::{ContextDataset, CotDataset, DatasetMeta, DirectDataset, EndpointPair, Mode, Trajectory};
use super::error::{Result, SamplingError};
use crate::chain::Instance;
use crate::scalar::Scalar;

/// One dataset record as written to disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub mode: Mode,
    pub x0: usize,
    /// Full path `x_0..x_T`; present only in CoT mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
    #[serde(rename = "xT")]
    pub xt: usize,
    pub seed: u64,
    pub record_index: u64,
    pub instance_digest: String,
}

pub fn to_records(data: &ContextDataset) -> Vec<DatasetRecord> {
    let meta = data.meta();
    let make = |i: usize, x0, path, xt| DatasetRecord {
        mode: data.mode(),
        x0,
        path,
        xt,
        seed: meta.seed,
        record_index: i as u64,
        instance_digest: meta.instance_digest.clone(),
    };
    match data {
        ContextDataset::Direct(d) => d.records.iter().enumerate().map(|(i, r)| make(i, r.x0, None, r.xt)).collect(),
        ContextDataset::Cot(d) => d
            .records
            .iter()
            .enumerate()
            .map(|(i, t)| make(i, t.initial(), Some(t.states().to_vec()), t.terminal()))
            .collect(),
    }
}

pub fn write_jsonl<W: Write>(data: &ContextDataset, mut out: W) -> Result<()> {
    for record in to_records(data) {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a dataset and checks it against the instance it claims to come
/// from: digest, state range, path length and record order.
pub fn read_jsonl<R: BufRead, S: Scalar>(input: R, instance: &Instance<S>) -> Result<ContextDataset> {
    let expected = instance.digest();
    let k = instance.k();
    let horizon = instance.horizon();
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<DatasetRecord>(&line)?);
    }
    let first = records.first().ok_or(SamplingError::EmptyDataset)?;
    let (mode, seed) = (first.mode, first.seed);
    for (i, r) in records.iter().enumerate() {
        let bad = |reason: &str| SamplingError::InvalidRecord { record: i, reason: reason.to_string() };
        if r.instance_digest != expected {
            return Err(SamplingError::DigestMismatch { expected: expected.clone(), found: r.instance_digest.clone() });
        }
        if r.mode != mode || r.seed != seed {
            return Err(bad("mode or seed differs from the first record"));
        }
        if r.record_index != i as u64 {
            return Err(bad("record_index out of order"));
        }
        if r.x0 >= k || r.xt >= k {
            return Err(bad("state out of range"));
        }
        match (&r.path, mode) {
            (None, Mode::Direct) => {}
            (Some(p), Mode::Cot) => {
                if p.len() != horizon + 1 || p.iter().any(|&s| s >= k) {
                    return Err(bad("path has wrong length or out-of-range state"));
                }
                if p[0] != r.x0 || p[horizon] != r.xt {
                    return Err(bad("path endpoints disagree with x0/xT"));
                }
            }
            (Some(_), Mode::Direct) => return Err(bad("direct record carries intermediate states")),
            (None, Mode::Cot) => return Err(bad("cot record is missing its path")),
        }
    }
    let meta = DatasetMeta { instance_digest: expected, seed, k, horizon };
    Ok(match mode {
        Mode::Direct => ContextDataset::Direct(DirectDataset {
            meta,
            records: records.iter().map(|r| EndpointPair { x0: r.x0, xt: r.xt }).collect(),
        }),
        Mode::Cot => ContextDataset::Cot(CotDataset {
            meta,
            records: records.into_iter().map(|r| Trajectory::new(r.path.expect("checked"))).collect(),
            homogeneous: instance.is_homogeneous(),
        }),
    })
}
