//! Attribution engines behind a common request type.
//!
//! Every engine returns an [`AttributionMap`] normalized with the same
//! min-max rule, so downstream metrics compare methods on equal footing.

mod ablation;
mod gradients;
mod lime;
mod timereise;

pub use ablation::{feature_ablation, occlusion, occlusion_windows};
pub use gradients::{integrated_gradients, integrated_gradients_signed};
pub use lime::lime_surrogate;
pub use timereise::{timereise, timereise_raw};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{argmax, check_class, Classifier};
use crate::data::{channel_constant, AttributionMap, Matrix, Shape};
use crate::error::{Error, Result};
use crate::masks::{generate_maskset, MaskGenSpec, MaskSet};

/// Which class probability an engine explains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Argmax of the unperturbed prediction, ties to the lowest index.
    #[default]
    Predicted,
    Class(usize),
}

/// How a soft mask is applied to an input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `x * m`
    #[default]
    Multiply,
    /// `m * x + (1 - m) * channel_mean`
    MeanReplace,
    /// `m * x`, kept distinct from `Multiply` for configuration parity.
    ZeroReplace,
}

impl Perturbation {
    pub fn apply(&self, x: &Matrix, mask: &Matrix, channel_means: &[f64]) -> Result<Matrix> {
        x.ensure_shape(mask.shape())?;
        match self {
            Perturbation::Multiply | Perturbation::ZeroReplace => x.zip_map(mask, |v, m| v * m),
            Perturbation::MeanReplace => {
                check_means(x.shape(), channel_means)?;
                let mut out = x.clone();
                for c in 0..x.channels() {
                    let mean = channel_means[c];
                    for (o, m) in out.row_mut(c).iter_mut().zip(mask.row(c)) {
                        *o = m * *o + (1.0 - m) * mean;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Value written into removed features by occlusion-style engines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    ChannelMean,
    Zero,
}

impl Baseline {
    pub fn value(&self, channel: usize, channel_means: &[f64]) -> f64 {
        match self {
            Baseline::ChannelMean => channel_means[channel],
            Baseline::Zero => 0.0,
        }
    }

    pub fn sample(&self, shape: Shape, channel_means: &[f64]) -> Matrix {
        match self {
            Baseline::ChannelMean => channel_constant(shape, channel_means),
            Baseline::Zero => Matrix::zeros(shape),
        }
    }
}

/// One sample to explain with one classifier.
#[derive(Clone, Copy)]
pub struct AttributionRequest<'a> {
    pub sample: &'a Matrix,
    pub classifier: &'a dyn Classifier,
    pub target: Target,
    /// Per-channel dataset means used by mean-based baselines.
    pub channel_means: &'a [f64],
    pub seed: u64,
}

impl<'a> AttributionRequest<'a> {
    pub fn new(
        sample: &'a Matrix,
        classifier: &'a dyn Classifier,
        channel_means: &'a [f64],
    ) -> Self {
        AttributionRequest {
            sample,
            classifier,
            target: Target::Predicted,
            channel_means,
            seed: 0,
        }
    }

    pub fn with_target(self, target: Target) -> Self {
        AttributionRequest { target, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        AttributionRequest { seed, ..self }
    }

    pub fn with_sample(self, sample: &'a Matrix) -> Self {
        AttributionRequest { sample, ..self }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.sample.ensure_shape(self.classifier.input_shape())?;
        check_means(self.sample.shape(), self.channel_means)
    }

    /// Resolves `Target::Predicted` with one forward pass.
    pub fn resolve_target(&self) -> Result<usize> {
        match self.target {
            Target::Class(k) => {
                check_class(self.classifier, k)?;
                Ok(k)
            }
            Target::Predicted => Ok(argmax(&self.classifier.score(self.sample)?)),
        }
    }
}

fn check_means(shape: Shape, channel_means: &[f64]) -> Result<()> {
    if channel_means.len() != shape.channels {
        return Err(Error::InvalidInput(format!(
            "{} channel means for {} channels",
            channel_means.len(),
            shape.channels
        )));
    }
    Ok(())
}

const SCORE_CHUNK: usize = 32;

/// Scores `count` generated inputs in parallel and returns the `class`
/// probabilities in index order.
pub(crate) fn score_generated<F>(
    classifier: &dyn Classifier,
    count: usize,
    class: usize,
    make: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<Matrix> + Sync,
{
    let chunks: Vec<Vec<f64>> = (0..count.div_ceil(SCORE_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * SCORE_CHUNK;
            let end = (start + SCORE_CHUNK).min(count);
            let inputs = (start..end).map(&make).collect::<Result<Vec<_>>>()?;
            let scores = classifier.score_batch(&inputs)?;
            Ok(scores.into_iter().map(|p| p[class]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Attribution method together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    Timereise {
        #[serde(default)]
        perturbation: Perturbation,
        /// Mask parameters; `None` selects the defaults for the sample length.
        #[serde(default)]
        masks: Option<MaskGenSpec>,
    },
    Occlusion {
        window: usize,
        stride: usize,
        #[serde(default)]
        baseline: Baseline,
    },
    FeatureAblation {
        group_size: usize,
        #[serde(default)]
        baseline: Baseline,
    },
    Lime {
        n_samples: usize,
        mask_density: f64,
        ridge_lambda: f64,
    },
    IntegratedGradients {
        steps: usize,
        #[serde(default)]
        baseline: Baseline,
    },
}

impl MethodConfig {
    pub fn timereise() -> Self {
        MethodConfig::Timereise {
            perturbation: Perturbation::Multiply,
            masks: None,
        }
    }

    pub fn occlusion() -> Self {
        MethodConfig::Occlusion {
            window: 1,
            stride: 1,
            baseline: Baseline::ChannelMean,
        }
    }

    pub fn feature_ablation() -> Self {
        MethodConfig::FeatureAblation {
            group_size: 1,
            baseline: Baseline::ChannelMean,
        }
    }

    pub fn lime() -> Self {
        MethodConfig::Lime {
            n_samples: 1000,
            mask_density: 0.5,
            ridge_lambda: 1.0,
        }
    }

    pub fn integrated_gradients() -> Self {
        MethodConfig::IntegratedGradients {
            steps: 50,
            baseline: Baseline::ChannelMean,
        }
    }

    /// Default configuration for a method name.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "timereise" => Self::timereise(),
            "occlusion" => Self::occlusion(),
            "feature_ablation" => Self::feature_ablation(),
            "lime" => Self::lime(),
            "integrated_gradients" => Self::integrated_gradients(),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Timereise { .. } => "timereise",
            MethodConfig::Occlusion { .. } => "occlusion",
            MethodConfig::FeatureAblation { .. } => "feature_ablation",
            MethodConfig::Lime { .. } => "lime",
            MethodConfig::IntegratedGradients { .. } => "integrated_gradients",
        }
    }

    /// Binds the configuration to a sample shape, generating masks where needed.
    pub fn prepare(&self, shape: Shape, mask_seed: u64) -> Result<PreparedMethod> {
        let maskset = match self {
            MethodConfig::Timereise { masks, .. } => {
                let spec = masks
                    .clone()
                    .unwrap_or_else(|| MaskGenSpec::default_for(shape.timesteps, mask_seed));
                Some(generate_maskset(shape, &spec)?)
            }
            _ => None,
        };
        Ok(PreparedMethod {
            config: self.clone(),
            maskset,
        })
    }
}

/// A method ready to explain samples of one shape.
#[derive(Debug, Clone)]
pub struct PreparedMethod {
    config: MethodConfig,
    maskset: Option<MaskSet>,
}

impl PreparedMethod {
    pub fn config(&self) -> &MethodConfig {
        &self.config
    }

    pub fn name(&self) -> &'static str {
        self.config.name()
    }

    pub fn maskset(&self) -> Option<&MaskSet> {
        self.maskset.as_ref()
    }

    pub fn attribute(&self, req: &AttributionRequest<'_>) -> Result<AttributionMap> {
        match &self.config {
            MethodConfig::Timereise { perturbation, .. } => {
                let masks = self.maskset.as_ref().expect("prepared with masks");
                timereise(req, masks, *perturbation)
            }
            MethodConfig::Occlusion {
                window,
                stride,
                baseline,
            } => occlusion(req, *window, *stride, *baseline),
            MethodConfig::FeatureAblation {
                group_size,
                baseline,
            } => feature_ablation(req, *group_size, *baseline),
            MethodConfig::Lime {
                n_samples,
                mask_density,
                ridge_lambda,
            } => lime_surrogate(req, *n_samples, *mask_density, *ridge_lambda),
            MethodConfig::IntegratedGradients { steps, baseline } => {
                let base = baseline.sample(req.sample.shape(), req.channel_means);
                integrated_gradients(req, &base, *steps)
            }
        }
    }
}
