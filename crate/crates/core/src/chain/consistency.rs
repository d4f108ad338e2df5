use super::instance::Instance;
use super::margins::{argmax_map, ArgmaxMap};
use crate::scalar::Scalar;

/// Why an instance failed the local-global hard-max check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyFailure {
    /// Row `row` of kernel `step` (1-based) has no unique maximum.
    LocalTie { step: usize, row: usize },
    /// Composing the per-step hard-max maps from `x0` lands on `composed`
    /// while the end-to-end kernel peaks at `global`.
    Mismatch { x0: usize, composed: usize, global: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// First violating initial state, if the failure is a mismatch.
    pub witness: Option<usize>,
    pub failure: Option<ConsistencyFailure>,
    /// `I_T o ... o I_1` for every initial state.
    pub composed_map: Vec<usize>,
}

/// Applies `maps` in order: `maps[T-1](...maps[0](i))`.
pub fn compose_maps(maps: &[ArgmaxMap], i: usize) -> usize {
    maps.iter().fold(i, |state, m| m.apply(state))
}

pub fn check_local_global_consistency<S: Scalar>(instance: &Instance<S>) -> ConsistencyReport {
    let maps: Vec<ArgmaxMap> = instance.kernels().iter().map(argmax_map).collect();
    let composed_map: Vec<usize> = (0..instance.k()).map(|i| compose_maps(&maps, i)).collect();
    for (t, m) in maps.iter().enumerate() {
        if let Some(&row) = m.tie_rows.iter().next() {
            return ConsistencyReport {
                consistent: false,
                witness: None,
                failure: Some(ConsistencyFailure::LocalTie { step: t + 1, row }),
                composed_map,
            };
        }
    }
    let global = argmax_map(&instance.end_to_end());
    for (x0, &composed) in composed_map.iter().enumerate() {
        if composed != global.map[x0] {
            return ConsistencyReport {
                consistent: false,
                witness: Some(x0),
                failure: Some(ConsistencyFailure::Mismatch { x0, composed, global: global.map[x0] }),
                composed_map,
            };
        }
    }
    ConsistencyReport { consistent: true, witness: None, failure: None, composed_map }
}
