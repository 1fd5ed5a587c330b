//! Small analytic classifiers used as controls and in verification.

use std::fmt;
use std::sync::Arc;

use super::{check_class, check_input, Classifier};
use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};

/// Returns the same probability vector for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantClassifier {
    shape: Shape,
    probs: Vec<f64>,
}

impl ConstantClassifier {
    pub fn new(shape: Shape, probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(ConstantClassifier { shape, probs })
    }

    pub fn uniform(shape: Shape, num_classes: usize) -> Self {
        ConstantClassifier {
            shape,
            probs: vec![1.0 / num_classes as f64; num_classes],
        }
    }
}

impl Classifier for ConstantClassifier {
    fn num_classes(&self) -> usize {
        self.probs.len()
    }

    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn id(&self) -> String {
        "constant".into()
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_input(self, x)?;
        Ok(self.probs.clone())
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Matrix, class: usize) -> Result<Matrix> {
        check_input(self, x)?;
        check_class(self, class)?;
        Ok(Matrix::zeros(self.shape))
    }
}

/// Two-class classifier with `P(class 1) = intercept + <weights, x>`.
///
/// Callers keep inputs in the range where the probability stays in [0, 1];
/// scoring outside that range is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbabilityClassifier {
    weights: Matrix,
    intercept: f64,
}

impl LinearProbabilityClassifier {
    pub fn new(weights: Matrix, intercept: f64) -> Self {
        LinearProbabilityClassifier { weights, intercept }
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }
}

impl Classifier for LinearProbabilityClassifier {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_shape(&self) -> Shape {
        self.weights.shape()
    }

    fn id(&self) -> String {
        "linear_probability".into()
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_input(self, x)?;
        let p = self.intercept + self.weights.dot(x)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "linear probability {p} left [0, 1]"
            )));
        }
        Ok(vec![1.0 - p, p])
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Matrix, class: usize) -> Result<Matrix> {
        check_input(self, x)?;
        check_class(self, class)?;
        Ok(if class == 1 {
            self.weights.clone()
        } else {
            self.weights.map(|w| -w)
        })
    }
}

type ScoreFn = dyn Fn(&Matrix) -> Vec<f64> + Send + Sync;

/// Wraps a closure as a black-box classifier.
#[derive(Clone)]
pub struct FnClassifier {
    shape: Shape,
    num_classes: usize,
    name: String,
    f: Arc<ScoreFn>,
}

impl FnClassifier {
    pub fn new(
        shape: Shape,
        num_classes: usize,
        name: impl Into<String>,
        f: impl Fn(&Matrix) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FnClassifier {
            shape,
            num_classes,
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnClassifier")
            .field("shape", &self.shape)
            .field("num_classes", &self.num_classes)
            .field("name", &self.name)
            .finish()
    }
}

impl Classifier for FnClassifier {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_shape(&self) -> Shape {
        self.shape
    }

    fn id(&self) -> String {
        self.name.clone()
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_input(self, x)?;
        let probs = (self.f)(x);
        if probs.len() != self.num_classes {
            return Err(Error::InvalidInput(format!(
                "score function returned {} values for {} classes",
                probs.len(),
                self.num_classes
            )));
        }
        Ok(probs)
    }
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-6
    {
        return Err(Error::InvalidInput(format!(
            "{probs:?} is not a probability vector"
        )));
    }
    Ok(())
}
