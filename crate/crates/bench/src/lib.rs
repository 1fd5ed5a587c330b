//! Shared fixtures for the criterion benchmarks.

use timereise_core::dataio::{generate_anomaly_dataset, AnomalyGenSpec};
use timereise_core::{Matrix, MaskGenSpec, OracleAnomalyClassifier, Shape};

/// One anomalous sample with the oracle that explains it.
pub struct Fixture {
    pub shape: Shape,
    pub sample: Matrix,
    pub channel_means: Vec<f64>,
    pub oracle: OracleAnomalyClassifier,
}

impl Fixture {
    pub fn new(channels: usize, timesteps: usize) -> Self {
        let data = generate_anomaly_dataset(&AnomalyGenSpec {
            n_train: 16,
            n_test: 1,
            channels,
            timesteps,
            anomaly_rate: 1.0,
            seed: 7,
            ..AnomalyGenSpec::default()
        })
        .expect("valid generator spec");
        let shape = data.test.shape();
        Fixture {
            shape,
            sample: data.test.samples()[0].values().clone(),
            channel_means: data.train.channel_means().to_vec(),
            oracle: OracleAnomalyClassifier::new(shape),
        }
    }
}

/// Three densities at one granularity with `per_combo` masks each.
pub fn scaling_spec(timesteps: usize, per_combo: usize) -> MaskGenSpec {
    MaskGenSpec {
        densities: vec![0.25, 0.5, 0.75],
        granularities: vec![timesteps.div_ceil(8)],
        per_combo_count: per_combo,
        channel_joint: false,
        seed: 7,
    }
}
