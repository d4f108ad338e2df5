use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::prompts::PromptTemplate;
use super::{split_seed, HarnessError, Metric, Result};
use crate::benchgen::{
    build_modadd_instance, build_synthetic_instance, fresh_kernel_instance, Alignment, Letter, LetterRule,
    ModAddConfig, SyntheticConfig,
};
use crate::bounds::CoverageConstants;
use crate::chain::{Distribution, Instance, InstanceFile, Kernel, Provenance, DEFAULT_M_MAX};
use crate::estimators::{EstimatorKind, UndefinedPolicy};
use crate::sampling::Mode;
use crate::scalar::rational_from_decimal;

pub const DEFAULT_SEED: u64 = 2_718_281_828;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

pub(crate) fn default_n_grid() -> Vec<usize> {
    (8..=60).step_by(4).collect()
}

pub(crate) fn default_replicates() -> usize {
    200
}

pub(crate) fn default_thresholds() -> Vec<f64> {
    vec![0.7, 0.8, 0.9, 0.95]
}

fn default_k() -> usize {
    10
}

fn default_horizon() -> usize {
    2
}

fn default_epsilon() -> f64 {
    0.1
}

/// Reads and deserializes a TOML file.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    toml::from_str(&text).map_err(|e| HarnessError::InvalidConfig(format!("{}: {e}", path.display())))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Letter-rule task with the default rules unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_k")]
    pub k: usize,
    pub alignment: Alignment,
    /// Number of steps when `letters` is omitted; every step then uses `A`.
    #[serde(default = "default_horizon", rename = "T")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letters: Option<Vec<Letter>>,
    /// Overrides the probability of both rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_a: Option<LetterRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_b: Option<LetterRule>,
}

impl SyntheticSpec {
    pub fn new(alignment: Alignment, horizon: usize) -> Self {
        Self { k: 10, alignment, horizon, letters: None, p: None, rule_a: None, rule_b: None }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn config(&self) -> SyntheticConfig<f64> {
        let mut rule_a = self.rule_a.clone().unwrap_or_else(LetterRule::letter_a);
        let mut rule_b = self.rule_b.clone().unwrap_or_else(LetterRule::letter_b);
        if let Some(p) = self.p {
            rule_a.p = p;
            rule_b.p = p;
        }
        let letters = self.letters.clone().unwrap_or_else(|| vec![Letter::A; self.horizon]);
        SyntheticConfig { k: self.k, alignment: self.alignment, rule_a, rule_b, letters }
    }

    /// The same task with every probability read as an exact decimal.
    pub fn exact_config(&self) -> Result<SyntheticConfig<BigRational>> {
        let c = self.config();
        let exact = |r: &LetterRule| -> Result<LetterRule<BigRational>> {
            let p = rational_from_decimal(&format!("{}", r.p))
                .ok_or_else(|| HarnessError::InvalidConfig(format!("p = {} is not a decimal", r.p)))?;
            Ok(LetterRule { p, up: r.up, down: r.down })
        };
        Ok(SyntheticConfig {
            k: c.k,
            alignment: c.alignment,
            rule_a: exact(&c.rule_a)?,
            rule_b: exact(&c.rule_b)?,
            letters: c.letters,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModAddSpec {
    #[serde(rename = "M")]
    pub modulus: usize,
    pub addends: Vec<usize>,
    /// Inferred from the addends when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Alignment>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl ModAddSpec {
    pub fn new(modulus: usize, addends: Vec<usize>) -> Self {
        Self { modulus, addends, alignment: None, epsilon: 0.1 }
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment.unwrap_or(if self.addends.windows(2).all(|w| w[0] == w[1]) {
            Alignment::Same
        } else {
            Alignment::Diff
        })
    }

    pub fn config(&self) -> ModAddConfig<f64> {
        ModAddConfig {
            modulus: self.modulus,
            addends: self.addends.clone(),
            alignment: self.alignment(),
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreshSpec {
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub delta: f64,
    pub seed: u64,
}

/// Where an experiment's instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// A TOML instance file; relative paths resolve against the config file.
    File { path: PathBuf },
    Inline(InstanceFile),
    Synthetic(SyntheticSpec),
    Modadd(ModAddSpec),
    Fresh(FreshSpec),
}

impl InstanceSource {
    pub fn build(&self, base_dir: &Path) -> Result<Instance<f64>> {
        Ok(match self {
            InstanceSource::File { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| HarnessError::io(&full, e))?;
                InstanceFile::from_toml(&text)?.to_instance()?
            }
            InstanceSource::Inline(file) => file.to_instance()?,
            InstanceSource::Synthetic(spec) => build_synthetic_instance(&spec.config())?,
            InstanceSource::Modadd(spec) => build_modadd_instance(&spec.config())?,
            InstanceSource::Fresh(spec) => fresh_kernel_instance(spec.k, spec.horizon, spec.delta, spec.seed)?,
        })
    }

    /// Short label used in output file names.
    pub fn condition(&self) -> String {
        match self {
            InstanceSource::File { path } => {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into())
            }
            InstanceSource::Inline(_) => "inline".into(),
            InstanceSource::Synthetic(spec) => spec.alignment.name().into(),
            InstanceSource::Modadd(spec) => spec.alignment().name().into(),
            InstanceSource::Fresh(_) => "fresh".into(),
        }
    }
}

/// Constants for the theory overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default = "TheoryConfig::default_constant")]
    pub constant: f64,
    #[serde(default)]
    pub coverage: CoverageConstants,
    #[serde(default = "TheoryConfig::default_m_max")]
    pub m_max: usize,
}

impl TheoryConfig {
    fn default_constant() -> f64 {
        1.0
    }

    fn default_m_max() -> usize {
        DEFAULT_M_MAX
    }
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self { constant: 1.0, coverage: CoverageConstants::default(), m_max: DEFAULT_M_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "SweepConfig::default_experiment")]
    pub experiment: String,
    /// Defaults to the instance source's label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    pub instance: InstanceSource,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Empty means direct plus the CoT estimator matching the instance.
    #[serde(default)]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub undefined_policy: UndefinedPolicy,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SweepConfig {
    fn default_experiment() -> String {
        "sweep".into()
    }

    pub fn new(experiment: impl Into<String>, instance: InstanceSource) -> Self {
        Self {
            experiment: experiment.into(),
            condition: None,
            instance,
            n_grid: default_n_grid(),
            replicates: default_replicates(),
            seed: DEFAULT_SEED,
            estimators: Vec::new(),
            metric: Metric::default(),
            thresholds: default_thresholds(),
            undefined_policy: UndefinedPolicy::default(),
            theory: TheoryConfig::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = load_toml(path)?;
        config.base_dir = parent_dir(path);
        Ok(config)
    }

    pub fn condition_label(&self) -> String {
        self.condition.clone().unwrap_or_else(|| self.instance.condition())
    }
}

/// Instance family indexed by the horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingFamily {
    /// One kernel repeated `T` times; `mu` defaults to uniform.
    Homogeneous {
        kernel: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<Vec<f64>>,
    },
    /// A fresh random permutation-mixture kernel with margin `delta` per step.
    FreshKernels { k: usize, delta: f64, seed: u64 },
}

impl ScalingFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingFamily::Homogeneous { .. } => "homogeneous",
            ScalingFamily::FreshKernels { .. } => "fresh_kernels",
        }
    }

    pub fn instance(&self, horizon: usize) -> Result<Instance<f64>> {
        match self {
            ScalingFamily::Homogeneous { kernel, mu } => {
                let p = Kernel::new(kernel.clone())?;
                let mu = match mu {
                    Some(w) => Distribution::new(w.clone())?,
                    None => Distribution::uniform(p.k()),
                };
                let provenance = Provenance::new("homogeneous_family").with("T", horizon);
                Ok(Instance::homogeneous(mu, p, horizon)?.with_provenance(provenance))
            }
            ScalingFamily::FreshKernels { k, delta, seed } => {
                Ok(fresh_kernel_instance(*k, horizon, *delta, split_seed(*seed, &[horizon as u64]))?)
            }
        }
    }

    /// The CoT estimator whose slope the verdict is about.
    pub fn cot_estimator(&self) -> EstimatorKind {
        match self {
            ScalingFamily::Homogeneous { .. } => EstimatorKind::CotHomogeneous,
            ScalingFamily::FreshKernels { .. } => EstimatorKind::CotHeterogeneous,
        }
    }

    /// Accepted slope range for the verdict.
    pub fn default_band(&self) -> [f64; 2] {
        match self {
            ScalingFamily::Homogeneous { .. } => [-1.3, -0.7],
            ScalingFamily::FreshKernels { .. } => [-0.2, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "ScalingConfig::default_experiment")]
    pub experiment: String,
    pub family: ScalingFamily,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<usize>,
    pub tau: f64,
    /// Empty means the family's CoT estimator only.
    #[serde(default)]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub undefined_policy: UndefinedPolicy,
    /// Overrides the family's slope band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
}

impl ScalingConfig {
    fn default_experiment() -> String {
        "scaling".into()
    }

    pub fn new(family: ScalingFamily, t_grid: Vec<usize>, tau: f64) -> Self {
        Self {
            experiment: Self::default_experiment(),
            family,
            t_grid,
            tau,
            estimators: Vec::new(),
            n_grid: default_n_grid(),
            replicates: default_replicates(),
            seed: DEFAULT_SEED,
            metric: Metric::default(),
            undefined_policy: UndefinedPolicy::default(),
            band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "NoiseConfig::default_experiment")]
    pub experiment: String,
    /// Aligned letter-rule task; its `p` is replaced by each grid value.
    pub base: SyntheticSpec,
    pub p_grid: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub undefined_policy: UndefinedPolicy,
    #[serde(default)]
    pub theory: TheoryConfig,
}

impl NoiseConfig {
    fn default_experiment() -> String {
        "noise".into()
    }

    pub fn new(base: SyntheticSpec, p_grid: Vec<f64>) -> Self {
        Self {
            experiment: Self::default_experiment(),
            base,
            p_grid,
            n_grid: default_n_grid(),
            replicates: default_replicates(),
            seed: DEFAULT_SEED,
            metric: Metric::default(),
            thresholds: default_thresholds(),
            undefined_policy: UndefinedPolicy::default(),
            theory: TheoryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptConfig {
    #[serde(default = "PromptConfig::default_experiment")]
    pub experiment: String,
    pub instance: InstanceSource,
    pub template: PromptTemplate,
    pub mode: Mode,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Start states to query; all states when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<Vec<usize>>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PromptConfig {
    fn default_experiment() -> String {
        "prompts".into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = load_toml(path)?;
        config.base_dir = parent_dir(path);
        Ok(config)
    }
}
