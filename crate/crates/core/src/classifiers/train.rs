use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, LinearSoftmaxClassifier};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Mini-batch SGD with cross-entropy loss, plateau halving and early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation-loss improvement before the rate is halved.
    pub plateau_patience: usize,
    /// Minimum decrease of validation loss that counts as improvement.
    pub min_improvement: f64,
    /// Stop after this many consecutive halvings without improvement.
    pub max_halvings: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            max_epochs: 100,
            batch_size: 32,
            plateau_patience: 5,
            min_improvement: 1e-4,
            max_halvings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
    pub train_accuracy: f64,
    pub final_learning_rate: f64,
    pub stopped_early: bool,
}

struct Split {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

fn prepare(model: &LinearSoftmaxClassifier, data: &Dataset, what: &str) -> Result<Split> {
    if data.is_empty() {
        return Err(Error::InvalidInput(format!("{what} split is empty")));
    }
    let mut features = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for (i, s) in data.samples().iter().enumerate() {
        s.values().ensure_shape(model.shape)?;
        let label = s.label().ok_or_else(|| {
            Error::InvalidInput(format!("{what} sample {i} has no label"))
        })?;
        if label >= model.weights.len() {
            return Err(Error::InvalidInput(format!(
                "{what} sample {i} has label {label} but the model has {} classes",
                model.weights.len()
            )));
        }
        features.push(model.features(s.values()));
        labels.push(label);
    }
    Ok(Split { features, labels })
}

/// Mean cross-entropy and accuracy of `model` on a prepared split.
fn evaluate(model: &LinearSoftmaxClassifier, split: &Split) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (f, &y) in split.features.iter().zip(&split.labels) {
        let p = model.probabilities_from_features(f);
        loss -= p[y].max(1e-300).ln();
        if argmax(&p) == y {
            correct += 1;
        }
    }
    let n = split.labels.len() as f64;
    (loss / n, correct as f64 / n)
}

/// Trains `model` in place; the weights of the best validation epoch are kept.
pub fn train(
    model: &mut LinearSoftmaxClassifier,
    train: &Dataset,
    valid: &Dataset,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    if train.num_classes() != model.weights.len() || valid.num_classes() != model.weights.len() {
        return Err(Error::InvalidInput(format!(
            "model has {} classes, datasets have {} and {}",
            model.weights.len(),
            train.num_classes(),
            valid.num_classes()
        )));
    }
    if config.batch_size == 0 || config.learning_rate <= 0.0 {
        return Err(Error::InvalidInput(
            "batch size and learning rate must be positive".into(),
        ));
    }
    let train_split = prepare(model, train, "train")?;
    let valid_split = prepare(model, valid, "validation")?;
    let k = model.weights.len();
    let dim = model.shape.len();

    let mut lr = config.learning_rate;
    let (mut best_loss, _) = evaluate(model, &valid_split);
    let mut best_model = model.clone();
    let mut best_epoch = 0;
    let mut stale_epochs = 0;
    let mut halvings = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;

    let mut order: Vec<usize> = (0..train_split.labels.len()).collect();
    let mut grad_w = vec![vec![0.0; dim]; k];
    let mut grad_b = vec![0.0; k];

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        order.sort_unstable();
        order.shuffle(&mut stream_rng(seed, epoch as u64));

        for batch in order.chunks(config.batch_size) {
            grad_w.iter_mut().for_each(|g| g.fill(0.0));
            grad_b.fill(0.0);
            for &i in batch {
                let f = &train_split.features[i];
                let p = model.probabilities_from_features(f);
                for class in 0..k {
                    let err = p[class] - if class == train_split.labels[i] { 1.0 } else { 0.0 };
                    grad_b[class] += err;
                    for (g, x) in grad_w[class].iter_mut().zip(f) {
                        *g += err * x;
                    }
                }
            }
            let step = lr / batch.len() as f64;
            for class in 0..k {
                model.bias[class] -= step * grad_b[class];
                for (w, g) in model.weights[class]
                    .as_mut_slice()
                    .iter_mut()
                    .zip(&grad_w[class])
                {
                    *w -= step * g;
                }
            }
        }

        let (val_loss, _) = evaluate(model, &valid_split);
        if val_loss < best_loss - config.min_improvement {
            best_loss = val_loss;
            best_model = model.clone();
            best_epoch = epoch;
            stale_epochs = 0;
            halvings = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.plateau_patience {
                lr /= 2.0;
                halvings += 1;
                stale_epochs = 0;
                log::debug!("epoch {epoch}: plateau, learning rate halved to {lr}");
                if halvings >= config.max_halvings {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    *model = best_model;
    let (validation_loss, validation_accuracy) = evaluate(model, &valid_split);
    let (_, train_accuracy) = evaluate(model, &train_split);
    Ok(TrainReport {
        epochs_run,
        best_epoch,
        validation_loss,
        validation_accuracy,
        train_accuracy,
        final_learning_rate: lr,
        stopped_early,
    })
}
