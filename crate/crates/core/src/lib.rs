//! Randomized-mask attribution for black-box time-series classifiers.
//!
//! The crate provides the mask-based attribution engine together with
//! baseline attribution methods (occlusion, feature ablation, a LIME-style
//! surrogate and integrated gradients), faithfulness and robustness
//! metrics, a synthetic point-anomaly dataset with ground-truth attributions,
//! and persistence for every artifact.

pub mod attribution;
pub mod bench;
pub mod classifiers;
pub mod data;
pub mod dataio;
pub mod error;
pub mod masks;
pub mod metrics;
pub mod rng;

pub use classifiers::{Classifier, LinearSoftmaxClassifier, OracleAnomalyClassifier};
pub use data::{minmax_normalize, per_channel_means, AttributionMap, Dataset, Matrix, Shape, TimeSeriesSample};
pub use error::{Error, Result};
pub use masks::{generate_mask, generate_maskset, Mask, MaskGenSpec, MaskSet};
