//! Run configuration: one TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use timereise_core::attribution::MethodConfig;
use timereise_core::classifiers::{FeatureMap, TrainConfig};
use timereise_core::dataio::AnomalyGenSpec;
use timereise_core::rng::derive_seed;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Every stage seed is derived from this value.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub classifier: ClassifierConfig,
    pub attribution: AttributionConfig,
    pub metrics: MetricsConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            out_dir: PathBuf::from("run"),
            data: DataConfig::default(),
            classifier: ClassifierConfig::default(),
            attribution: AttributionConfig::default(),
            metrics: MetricsConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Synthetic point-anomaly data.
    Generate {
        #[serde(default = "default_dataset_name")]
        name: String,
        /// Generator seed; derived from the root seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        n_train: usize,
        n_test: usize,
        timesteps: usize,
        channels: usize,
        noise_sigma: f64,
        spike_min: f64,
        spike_max: f64,
        anomaly_rate: f64,
    },
    UnivariateTsv {
        name: String,
        train: PathBuf,
        test: PathBuf,
    },
    MultivariateJsonl {
        name: String,
        train: PathBuf,
        test: PathBuf,
    },
}

fn default_dataset_name() -> String {
    "Anomaly".into()
}

impl Default for DataConfig {
    fn default() -> Self {
        let g = AnomalyGenSpec::default();
        DataConfig::Generate {
            name: default_dataset_name(),
            seed: None,
            n_train: g.n_train,
            n_test: g.n_test,
            timesteps: g.timesteps,
            channels: g.channels,
            noise_sigma: g.noise_sigma,
            spike_min: g.spike_min,
            spike_max: g.spike_max,
            anomaly_rate: g.anomaly_rate,
        }
    }
}

impl DataConfig {
    pub fn name(&self) -> &str {
        match self {
            DataConfig::Generate { name, .. }
            | DataConfig::UnivariateTsv { name, .. }
            | DataConfig::MultivariateJsonl { name, .. } => name,
        }
    }

    /// Generator parameters; `derived_seed` is used unless the config pins one.
    pub fn generator_spec(&self, derived_seed: u64) -> Option<AnomalyGenSpec> {
        match *self {
            DataConfig::Generate {
                seed,
                n_train,
                n_test,
                timesteps,
                channels,
                noise_sigma,
                spike_min,
                spike_max,
                anomaly_rate,
                ..
            } => Some(AnomalyGenSpec {
                n_train,
                n_test,
                timesteps,
                channels,
                noise_sigma,
                spike_min,
                spike_max,
                anomaly_rate,
                seed: seed.unwrap_or(derived_seed),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Oracle {
        spike_threshold: f64,
        softness: f64,
        noise_mean: f64,
        noise_sigma: f64,
    },
    LinearSoftmax {
        feature_map: FeatureMap,
        /// Fraction of the training split held out for validation.
        validation_fraction: f64,
        train: TrainConfig,
    },
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Oracle {
            spike_threshold: 4.0,
            softness: 1.0,
            noise_mean: 0.0,
            noise_sigma: 1.0,
        }
    }
}

impl ClassifierConfig {
    pub fn linear_default() -> Self {
        ClassifierConfig::LinearSoftmax {
            // Offset is the mean of (z / 3)^4 for unit Gaussian noise.
            feature_map: FeatureMap::Quartic {
                center: 0.0,
                scale: 3.0,
                offset: 1.0 / 27.0,
            },
            validation_fraction: 0.2,
            train: TrainConfig::default(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "oracle" => Some(Self::default()),
            "linear_softmax" => Some(Self::linear_default()),
            _ => None,
        }
    }
}

/// A method given by name with default parameters, or as a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Name(String),
    Full(MethodConfig),
}

impl MethodEntry {
    pub fn resolve(&self) -> Result<MethodConfig, CliError> {
        match self {
            MethodEntry::Name(n) => MethodConfig::by_name(n)
                .ok_or_else(|| CliError::Config(format!("unknown attribution method '{n}'"))),
            MethodEntry::Full(m) => Ok(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetPool {
    /// Any test sample.
    All,
    /// Only test samples labelled anomalous (class 1).
    Anomalous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionConfig {
    pub methods: Vec<MethodEntry>,
    pub subset_size: usize,
    pub subset_pool: SubsetPool,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        AttributionConfig {
            methods: ["timereise", "occlusion", "feature_ablation", "lime", "integrated_gradients"]
                .into_iter()
                .map(|m| MethodEntry::Name(m.into()))
                .collect(),
            subset_size: 100,
            subset_pool: SubsetPool::All,
        }
    }
}

impl AttributionConfig {
    pub fn resolved_methods(&self) -> Result<Vec<MethodConfig>, CliError> {
        let methods: Vec<MethodConfig> = self
            .methods
            .iter()
            .map(MethodEntry::resolve)
            .collect::<Result<_, _>>()?;
        for (i, m) in methods.iter().enumerate() {
            if methods[..i].iter().any(|o| o.name() == m.name()) {
                return Err(CliError::Config(format!(
                    "method '{}' listed twice",
                    m.name()
                )));
            }
        }
        Ok(methods)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    ChannelMean,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub num_steps: usize,
    /// Value written into deleted features.
    pub replacement: Replacement,
    pub infidelity_perturbations: usize,
    /// Infidelity noise standard deviation as a multiple of each channel's std.
    pub noise_scale: f64,
    pub sensitivity_perturbations: usize,
    /// Sensitivity L-infinity radius as a multiple of each channel's std.
    pub radius_scale: f64,
    /// Significance level of the critical difference.
    pub alpha: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            num_steps: 50,
            replacement: Replacement::ChannelMean,
            infidelity_perturbations: 1000,
            noise_scale: 0.3,
            sensitivity_perturbations: 10,
            radius_scale: 0.02,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub mask_counts: Vec<usize>,
    pub timesteps: Vec<usize>,
    pub channels: usize,
    pub densities: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mask_counts: vec![100, 200, 400, 800],
            timesteps: vec![50, 200, 800],
            channels: 3,
            densities: vec![0.25, 0.5, 0.75],
        }
    }
}

/// Per-stage seeds, all derived from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub data: u64,
    pub train: u64,
    pub subset: u64,
    pub masks: u64,
    pub attribution: u64,
    pub infidelity: u64,
    pub sensitivity: u64,
}

impl StageSeeds {
    pub fn from_root(root: u64) -> Self {
        StageSeeds {
            data: derive_seed(root, "data"),
            train: derive_seed(root, "train"),
            subset: derive_seed(root, "subset"),
            masks: derive_seed(root, "masks"),
            attribution: derive_seed(root, "attribution"),
            infidelity: derive_seed(root, "infidelity"),
            sensitivity: derive_seed(root, "sensitivity"),
        }
    }
}

/// Flag values that override the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub methods: Option<Vec<String>>,
    pub subset_size: Option<usize>,
    pub subset_pool: Option<SubsetPool>,
    pub classifier: Option<String>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub anomaly_rate: Option<f64>,
    pub num_steps: Option<usize>,
    pub infidelity_perturbations: Option<usize>,
    pub sensitivity_perturbations: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Internal(format!("serialize config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(m) = &o.methods {
            self.attribution.methods = m
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| MethodEntry::Name(s.clone()))
                .collect();
        }
        if let Some(n) = o.subset_size {
            self.attribution.subset_size = n;
        }
        if let Some(p) = &o.subset_pool {
            self.attribution.subset_pool = p.clone();
        }
        if let Some(c) = &o.classifier {
            self.classifier = ClassifierConfig::by_name(c)
                .ok_or_else(|| CliError::Config(format!("unknown classifier '{c}'")))?;
        }
        if o.n_train.is_some() || o.n_test.is_some() || o.anomaly_rate.is_some() {
            match &mut self.data {
                DataConfig::Generate {
                    n_train,
                    n_test,
                    anomaly_rate,
                    ..
                } => {
                    if let Some(v) = o.n_train {
                        *n_train = v;
                    }
                    if let Some(v) = o.n_test {
                        *n_test = v;
                    }
                    if let Some(v) = o.anomaly_rate {
                        *anomaly_rate = v;
                    }
                }
                _ => {
                    return Err(CliError::Config(
                        "generator flags need a generated data source".into(),
                    ))
                }
            }
        }
        if let Some(n) = o.num_steps {
            self.metrics.num_steps = n;
        }
        if let Some(n) = o.infidelity_perturbations {
            self.metrics.infidelity_perturbations = n;
        }
        if let Some(n) = o.sensitivity_perturbations {
            self.metrics.sensitivity_perturbations = n;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(spec) = self.data.generator_spec(0) {
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.attribution.subset_size == 0 {
            return bad("subset_size must be positive".into());
        }
        self.attribution.resolved_methods()?;
        let m = &self.metrics;
        if m.num_steps == 0 || m.infidelity_perturbations == 0 || m.sensitivity_perturbations == 0
        {
            return bad("metric step and perturbation counts must be positive".into());
        }
        if !(m.noise_scale > 0.0 && m.radius_scale > 0.0) {
            return bad("noise_scale and radius_scale must be positive".into());
        }
        if let ClassifierConfig::LinearSoftmax {
            validation_fraction,
            ..
        } = &self.classifier
        {
            if !(*validation_fraction > 0.0 && *validation_fraction < 1.0) {
                return bad("validation_fraction must lie in (0, 1)".into());
            }
        }
        if self.bench.mask_counts.is_empty() || self.bench.timesteps.is_empty() {
            return bad("bench grid must not be empty".into());
        }
        Ok(())
    }

    pub fn seeds(&self) -> StageSeeds {
        StageSeeds::from_root(self.seed)
    }
}
