use serde::{Deserialize, Serialize};

use super::{check_class, check_input, sigmoid, Classifier};
use crate::data::{Matrix, Shape};
use crate::error::Result;

/// Closed-form detector for point anomalies.
///
/// `P(anomalous) = sigmoid((max |z| - spike_threshold) / softness)` where
/// `z = (x - noise_mean) / noise_sigma`. Class 0 is normal, class 1 anomalous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAnomalyClassifier {
    pub shape: Shape,
    pub noise_mean: f64,
    pub noise_sigma: f64,
    pub spike_threshold: f64,
    pub softness: f64,
}

impl OracleAnomalyClassifier {
    pub fn new(shape: Shape) -> Self {
        OracleAnomalyClassifier {
            shape,
            noise_mean: 0.0,
            noise_sigma: 1.0,
            spike_threshold: 4.0,
            softness: 1.0,
        }
    }

    /// Flat index and value of the largest |z|; ties resolve to the lowest index.
    fn max_abs_z(&self, x: &Matrix) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in x.as_slice().iter().enumerate() {
            let z = ((v - self.noise_mean) / self.noise_sigma).abs();
            if z > best.1 {
                best = (i, z);
            }
        }
        best
    }

    pub fn anomaly_probability(&self, x: &Matrix) -> f64 {
        let (_, z) = self.max_abs_z(x);
        sigmoid((z - self.spike_threshold) / self.softness)
    }
}

impl Classifier for OracleAnomalyClassifier {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn id(&self) -> String {
        format!(
            "oracle(threshold={},softness={},sigma={})",
            self.spike_threshold, self.softness, self.noise_sigma
        )
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_input(self, x)?;
        let p = self.anomaly_probability(x);
        Ok(vec![1.0 - p, p])
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    /// Nonzero only at the max-|z| entry; exact wherever that entry is unique.
    fn gradient(&self, x: &Matrix, class: usize) -> Result<Matrix> {
        check_input(self, x)?;
        check_class(self, class)?;
        let (idx, z) = self.max_abs_z(x);
        let p = sigmoid((z - self.spike_threshold) / self.softness);
        let sign = (x.as_slice()[idx] - self.noise_mean).signum();
        let dp = p * (1.0 - p) / self.softness * sign / self.noise_sigma;
        let mut grad = Matrix::zeros(x.shape());
        grad.as_mut_slice()[idx] = if class == 1 { dp } else { -dp };
        Ok(grad)
    }
}
