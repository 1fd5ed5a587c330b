//! Synthetic point-anomaly dataset with known ground-truth attribution.
//!
//! Normal samples are i.i.d. Gaussian noise. An anomalous sample has one
//! entry, at a uniformly chosen (channel, timestep), set to a spike of
//! uniformly drawn magnitude and random sign. Label 0 is normal, 1 anomalous.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, Shape, TimeSeriesSample};
use crate::error::{Error, Result};
use crate::rng::{stream_id, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyGenSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub timesteps: usize,
    pub channels: usize,
    pub noise_sigma: f64,
    /// Spike magnitude range, in units of `noise_sigma`.
    pub spike_min: f64,
    pub spike_max: f64,
    pub anomaly_rate: f64,
    pub seed: u64,
}

impl Default for AnomalyGenSpec {
    fn default() -> Self {
        AnomalyGenSpec {
            n_train: 35_000,
            n_test: 15_000,
            timesteps: 50,
            channels: 3,
            noise_sigma: 1.0,
            spike_min: 6.0,
            spike_max: 10.0,
            anomaly_rate: 0.5,
            seed: 0,
        }
    }
}

impl AnomalyGenSpec {
    pub const NUM_CLASSES: usize = 2;

    pub fn shape(&self) -> Shape {
        Shape::new(self.channels, self.timesteps)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(msg.to_string()));
        if self.channels == 0 || self.timesteps == 0 {
            return bad("channels and timesteps must be positive");
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("train and test sizes must be positive");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive");
        }
        if !(self.spike_min > 0.0 && self.spike_min <= self.spike_max && self.spike_max.is_finite())
        {
            return bad("spike range must satisfy 0 < spike_min <= spike_max");
        }
        if !(0.0..=1.0).contains(&self.anomaly_rate) {
            return bad("anomaly_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Location of the single spike of an anomalous sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthMap {
    pub split: Split,
    pub sample_id: usize,
    pub channel: usize,
    pub timestep: usize,
}

impl GroundTruthMap {
    /// Binary matrix with a single one at the spike.
    pub fn to_matrix(&self, shape: Shape) -> Matrix {
        let mut m = Matrix::zeros(shape);
        m.set(self.channel, self.timestep, 1.0);
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub ground_truth: Vec<GroundTruthMap>,
}

impl AnomalyDataset {
    pub fn ground_truth_for(&self, split: Split, sample_id: usize) -> Option<&GroundTruthMap> {
        self.ground_truth
            .iter()
            .find(|g| g.split == split && g.sample_id == sample_id)
    }
}

fn generate_split(
    spec: &AnomalyGenSpec,
    split: Split,
    n: usize,
) -> Result<(Vec<TimeSeriesSample>, Vec<GroundTruthMap>)> {
    let shape = spec.shape();
    let split_index = match split {
        Split::Train => 0,
        Split::Test => 1,
    };
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidSpec(format!("noise distribution: {e}")))?;
    let generated: Vec<(TimeSeriesSample, Option<GroundTruthMap>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, stream_id(split_index, 0, i));
            let anomalous = rng.random::<f64>() < spec.anomaly_rate;
            let values: Vec<f64> = (0..shape.len()).map(|_| noise.sample(&mut rng)).collect();
            let mut values = Matrix::from_vec(shape, values)?;
            let mut truth = None;
            if anomalous {
                let channel = rng.random_range(0..shape.channels);
                let timestep = rng.random_range(0..shape.timesteps);
                let magnitude = if spec.spike_max > spec.spike_min {
                    rng.random_range(spec.spike_min..spec.spike_max)
                } else {
                    spec.spike_min
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                values.set(channel, timestep, sign * magnitude * spec.noise_sigma);
                truth = Some(GroundTruthMap {
                    split,
                    sample_id: i,
                    channel,
                    timestep,
                });
            }
            let sample = TimeSeriesSample::new(values, Some(usize::from(anomalous)))?;
            Ok((sample, truth))
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(n);
    let mut truths = Vec::new();
    for (s, t) in generated {
        samples.push(s);
        truths.extend(t);
    }
    Ok((samples, truths))
}

/// Generates train and test splits plus ground truth for every anomalous sample.
pub fn generate_anomaly_dataset(spec: &AnomalyGenSpec) -> Result<AnomalyDataset> {
    spec.validate()?;
    let (train, mut truth) = generate_split(spec, Split::Train, spec.n_train)?;
    let (test, test_truth) = generate_split(spec, Split::Test, spec.n_test)?;
    truth.extend(test_truth);
    Ok(AnomalyDataset {
        train: Dataset::new("Anomaly", AnomalyGenSpec::NUM_CLASSES, train)?,
        test: Dataset::new("Anomaly", AnomalyGenSpec::NUM_CLASSES, test)?,
        ground_truth: truth,
    })
}
