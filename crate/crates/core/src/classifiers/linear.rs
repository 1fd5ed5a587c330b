use serde::{Deserialize, Serialize};

use super::{check_class, check_input, softmax, Classifier};
use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};

/// Fixed elementwise transform applied to the input before the linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    Identity,
    /// `((x - center) / scale)^2 - offset`; lets a linear layer respond to signed spikes.
    Square { center: f64, scale: f64, offset: f64 },
    /// `((x - center) / scale)^4 - offset`; a sharper stand-in for the largest |x|.
    Quartic { center: f64, scale: f64, offset: f64 },
}

impl FeatureMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            FeatureMap::Identity => x,
            FeatureMap::Square {
                center,
                scale,
                offset,
            } => ((x - center) / scale).powi(2) - offset,
            FeatureMap::Quartic {
                center,
                scale,
                offset,
            } => ((x - center) / scale).powi(4) - offset,
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            FeatureMap::Identity => 1.0,
            FeatureMap::Square { center, scale, .. } => 2.0 * (x - center) / (scale * scale),
            FeatureMap::Quartic { center, scale, .. } => {
                4.0 * (x - center).powi(3) / scale.powi(4)
            }
        }
    }
}

/// Multinomial logistic regression over a (C, T) input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSoftmaxClassifier {
    pub(crate) shape: Shape,
    pub(crate) feature_map: FeatureMap,
    /// One (C, T) weight matrix per class.
    pub(crate) weights: Vec<Matrix>,
    pub(crate) bias: Vec<f64>,
}

impl LinearSoftmaxClassifier {
    pub fn zeros(shape: Shape, num_classes: usize, feature_map: FeatureMap) -> Self {
        LinearSoftmaxClassifier {
            shape,
            feature_map,
            weights: vec![Matrix::zeros(shape); num_classes],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn from_parts(
        feature_map: FeatureMap,
        weights: Vec<Matrix>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let shape = weights
            .first()
            .map(Matrix::shape)
            .ok_or_else(|| Error::InvalidInput("classifier needs at least one class".into()))?;
        if weights.len() != bias.len() {
            return Err(Error::InvalidInput(format!(
                "{} weight matrices but {} biases",
                weights.len(),
                bias.len()
            )));
        }
        for w in &weights {
            w.ensure_shape(shape)?;
            if !w.is_finite() {
                return Err(Error::InvalidInput("non-finite weights".into()));
            }
        }
        Ok(LinearSoftmaxClassifier {
            shape,
            feature_map,
            weights,
            bias,
        })
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn feature_map(&self) -> FeatureMap {
        self.feature_map
    }

    pub(crate) fn features(&self, x: &Matrix) -> Vec<f64> {
        x.as_slice()
            .iter()
            .map(|&v| self.feature_map.apply(v))
            .collect()
    }

    pub(crate) fn probabilities_from_features(&self, features: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| {
                w.as_slice()
                    .iter()
                    .zip(features)
                    .map(|(a, f)| a * f)
                    .sum::<f64>()
                    + b
            })
            .collect();
        softmax(&logits)
    }
}

impl Classifier for LinearSoftmaxClassifier {
    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn id(&self) -> String {
        format!("linear_softmax(k={})", self.weights.len())
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_input(self, x)?;
        Ok(self.probabilities_from_features(&self.features(x)))
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    /// dP_k/dx = P_k * (w_k - sum_j P_j w_j) * phi'(x).
    fn gradient(&self, x: &Matrix, class: usize) -> Result<Matrix> {
        check_input(self, x)?;
        check_class(self, class)?;
        let probs = self.probabilities_from_features(&self.features(x));
        let pk = probs[class];
        let mut grad = Matrix::zeros(self.shape);
        for (i, g) in grad.as_mut_slice().iter_mut().enumerate() {
            let expected: f64 = self
                .weights
                .iter()
                .zip(&probs)
                .map(|(w, p)| p * w.as_slice()[i])
                .sum();
            *g = pk
                * (self.weights[class].as_slice()[i] - expected)
                * self.feature_map.derivative(x.as_slice()[i]);
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testutil::{finite_difference, max_relative_error};
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, Normal};

    fn random_matrix(shape: Shape, sigma: f64, seed: u64) -> Matrix {
        let mut rng = stream_rng(seed, 0);
        let normal = Normal::new(0.0, sigma).unwrap();
        Matrix::from_vec(shape, (0..shape.len()).map(|_| normal.sample(&mut rng)).collect())
            .unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_scores() {
        let c = LinearSoftmaxClassifier::zeros(Shape::new(2, 5), 4, FeatureMap::Identity);
        let p = c.score(&random_matrix(Shape::new(2, 5), 1.0, 1)).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn balanced_two_class_gradient_is_quarter_weight_gap() {
        let w0 = Matrix::from_rows(&[[1.0, -2.0, 0.5, 3.0]]).unwrap();
        let w1 = Matrix::from_rows(&[[0.0, 1.0, 0.5, -1.0]]).unwrap();
        let c = LinearSoftmaxClassifier::from_parts(
            FeatureMap::Identity,
            vec![w0.clone(), w1.clone()],
            vec![0.0, 0.0],
        )
        .unwrap();
        // w0 . x == w1 . x, so P = (0.5, 0.5).
        let x = Matrix::from_rows(&[[3.0, 1.0, 0.7, 0.0]]).unwrap();
        assert_eq!(x.dot(&w0).unwrap(), x.dot(&w1).unwrap());
        let grad = c.gradient(&x, 0).unwrap();
        let expected = w0.zip_map(&w1, |a, b| 0.25 * (a - b)).unwrap();
        assert!(max_relative_error(&grad, &expected, 1e-12) < 1e-12);
        let numeric = finite_difference(&c, &x, 0, 1e-5);
        assert!(max_relative_error(&grad, &numeric, 1e-8) <= 1e-4);
        assert_eq!(c.score(&x).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_finite_differences_for_every_map() {
        let shape = Shape::new(2, 6);
        let maps = [
            FeatureMap::Identity,
            FeatureMap::Square {
                center: 0.1,
                scale: 2.0,
                offset: 0.25,
            },
            FeatureMap::Quartic {
                center: -0.2,
                scale: 1.5,
                offset: 0.1,
            },
        ];
        for (m, map) in maps.into_iter().enumerate() {
            let weights = (0..3)
                .map(|k| random_matrix(shape, 0.5, 100 + k))
                .collect::<Vec<_>>();
            let c = LinearSoftmaxClassifier::from_parts(map, weights, vec![0.1, -0.2, 0.0])
                .unwrap();
            for probe in 0..5 {
                let x = random_matrix(shape, 1.0, 1000 + probe + 10 * m as u64);
                for class in 0..3 {
                    let analytic = c.gradient(&x, class).unwrap();
                    let numeric = finite_difference(&c, &x, class, 1e-5);
                    let err = max_relative_error(&analytic, &numeric, 1e-6);
                    assert!(err <= 1e-4, "map {m} class {class}: {err}");
                }
            }
        }
    }

    #[test]
    fn gradient_rejects_bad_class() {
        let c = LinearSoftmaxClassifier::zeros(Shape::new(1, 3), 2, FeatureMap::Identity);
        assert!(c.gradient(&Matrix::zeros(Shape::new(1, 3)), 2).is_err());
    }
}
