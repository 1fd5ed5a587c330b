//! Black-box classifier contract and the built-in classifiers.

mod linear;
mod oracle;
mod stubs;
mod train;

pub use linear::{FeatureMap, LinearSoftmaxClassifier};
pub use oracle::OracleAnomalyClassifier;
pub use stubs::{ConstantClassifier, FnClassifier, LinearProbabilityClassifier};
pub use train::{train, TrainConfig, TrainReport};

use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};

/// A classifier that maps a (C, T) input to a probability vector over K classes.
///
/// Implementations must be deterministic and callable from several threads.
pub trait Classifier: Send + Sync {
    fn num_classes(&self) -> usize;

    fn input_shape(&self) -> Shape;

    /// Short identifier recorded in artifact provenance.
    fn id(&self) -> String;

    fn score(&self, x: &Matrix) -> Result<Vec<f64>>;

    /// Single entry point for batched scoring; must agree with `score` elementwise.
    fn score_batch(&self, xs: &[Matrix]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.score(x)).collect()
    }

    fn supports_gradients(&self) -> bool {
        false
    }

    /// Gradient of the class-`class` probability with respect to the input.
    fn gradient(&self, _x: &Matrix, _class: usize) -> Result<Matrix> {
        Err(Error::Unsupported(format!(
            "classifier {} does not provide gradients",
            self.id()
        )))
    }
}

/// Index of the largest probability; ties resolve to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn predict(classifier: &dyn Classifier, x: &Matrix) -> Result<usize> {
    Ok(argmax(&classifier.score(x)?))
}

/// Probability of `class` for input `x`.
pub fn class_probability(classifier: &dyn Classifier, x: &Matrix, class: usize) -> Result<f64> {
    let probs = classifier.score(x)?;
    probs.get(class).copied().ok_or_else(|| {
        Error::InvalidInput(format!(
            "class {class} out of range for {} classes",
            probs.len()
        ))
    })
}

pub(crate) fn check_input(classifier: &dyn Classifier, x: &Matrix) -> Result<()> {
    x.ensure_shape(classifier.input_shape())
}

pub(crate) fn check_class(classifier: &dyn Classifier, class: usize) -> Result<()> {
    if class >= classifier.num_classes() {
        return Err(Error::InvalidInput(format!(
            "class {class} out of range for {} classes",
            classifier.num_classes()
        )));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Central finite-difference gradient of one class probability.
    pub fn finite_difference(c: &dyn Classifier, x: &Matrix, class: usize, h: f64) -> Matrix {
        let mut grad = Matrix::zeros(x.shape());
        let mut probe = x.clone();
        for i in 0..x.as_slice().len() {
            let orig = probe.as_slice()[i];
            probe.as_mut_slice()[i] = orig + h;
            let up = c.score(&probe).unwrap()[class];
            probe.as_mut_slice()[i] = orig - h;
            let down = c.score(&probe).unwrap()[class];
            probe.as_mut_slice()[i] = orig;
            grad.as_mut_slice()[i] = (up - down) / (2.0 * h);
        }
        grad
    }

    /// Largest elementwise relative error, measured against max(|a|, |b|, floor).
    pub fn max_relative_error(a: &Matrix, b: &Matrix, floor: f64) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.3, 0.3, 0.2]), 1);
    }

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1000.0, 999.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
