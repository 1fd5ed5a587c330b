use serde::{Deserialize, Serialize};

use crate::attribution::score_generated;
use crate::classifiers::{argmax, Classifier};
use crate::data::{AttributionMap, Matrix, TimeSeriesSample};
use crate::error::{Error, Result};

/// Default number of steps of a deletion or insertion curve.
pub const DEFAULT_CURVE_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    /// Replace the most important features with the baseline first.
    Deletion,
    /// Start from the baseline and restore the most important features first.
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalCurve {
    fractions: Vec<f64>,
    values: Vec<f64>,
    auc: f64,
}

impl CausalCurve {
    pub fn new(fractions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if fractions.len() < 2 || fractions.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "curve needs matching fractions and values with at least 2 points, got {} and {}",
                fractions.len(),
                values.len()
            )));
        }
        if fractions[0] != 0.0 || *fractions.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("curve fractions must span [0, 1]".into()));
        }
        if fractions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("curve fractions must increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("curve values must be finite".into()));
        }
        let auc = trapezoid(&fractions, &values);
        Ok(CausalCurve {
            fractions,
            values,
            auc,
        })
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn auc(&self) -> f64 {
        self.auc
    }

    /// Two-column `fraction<TAB>value` text.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fraction\tvalue\n");
        for (f, v) in self.fractions.iter().zip(&self.values) {
            out.push_str(&format!("{f}\t{v}\n"));
        }
        out
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// Flat feature indices by descending score. Ties keep channel-major order.
pub fn feature_ranking(scores: &Matrix) -> Vec<usize> {
    let values = scores.as_slice();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

fn step_counts(n: usize, num_steps: usize) -> Result<Vec<usize>> {
    if num_steps == 0 {
        return Err(Error::InvalidInput("num_steps must be at least 1".into()));
    }
    Ok((0..=num_steps)
        .map(|k| ((k * n) as f64 / num_steps as f64).round() as usize)
        .collect())
}

/// Inputs along the curve, one per step.
fn curve_inputs(
    sample: &Matrix,
    scores: &Matrix,
    baseline: &Matrix,
    mode: CurveMode,
    num_steps: usize,
) -> Result<Vec<Matrix>> {
    sample.ensure_shape(scores.shape())?;
    sample.ensure_shape(baseline.shape())?;
    let order = feature_ranking(scores);
    let counts = step_counts(order.len(), num_steps)?;
    let (start, source) = match mode {
        CurveMode::Deletion => (sample, baseline),
        CurveMode::Insertion => (baseline, sample),
    };
    Ok(counts
        .iter()
        .map(|&count| {
            let mut x = start.clone();
            let dst = x.as_mut_slice();
            for &i in &order[..count] {
                dst[i] = source.as_slice()[i];
            }
            x
        })
        .collect())
}

fn fractions(num_steps: usize) -> Vec<f64> {
    (0..=num_steps).map(|k| k as f64 / num_steps as f64).collect()
}

/// Probability of the map's target class along a deletion or insertion path.
pub fn causal_curve(
    sample: &Matrix,
    map: &AttributionMap,
    classifier: &dyn Classifier,
    baseline: &Matrix,
    mode: CurveMode,
    num_steps: usize,
) -> Result<CausalCurve> {
    let inputs = curve_inputs(sample, map.scores(), baseline, mode, num_steps)?;
    let values = score_generated(classifier, inputs.len(), map.target_class(), |i| {
        Ok(inputs[i].clone())
    })?;
    CausalCurve::new(fractions(num_steps), values)
}

/// Replaces the most important features with `baseline` step by step.
pub fn deletion_curve(
    sample: &Matrix,
    map: &AttributionMap,
    classifier: &dyn Classifier,
    baseline: &Matrix,
    num_steps: usize,
) -> Result<CausalCurve> {
    causal_curve(sample, map, classifier, baseline, CurveMode::Deletion, num_steps)
}

/// Restores original values into `baseline`, most important first.
pub fn insertion_curve(
    sample: &Matrix,
    map: &AttributionMap,
    classifier: &dyn Classifier,
    baseline: &Matrix,
    num_steps: usize,
) -> Result<CausalCurve> {
    causal_curve(sample, map, classifier, baseline, CurveMode::Insertion, num_steps)
}

/// Accuracy over a labelled subset along deletion or insertion paths.
pub fn subset_accuracy_curve(
    samples: &[TimeSeriesSample],
    maps: &[AttributionMap],
    classifier: &dyn Classifier,
    baseline: &Matrix,
    mode: CurveMode,
    num_steps: usize,
) -> Result<CausalCurve> {
    if samples.is_empty() || samples.len() != maps.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples and {} maps; need one map per sample",
            samples.len(),
            maps.len()
        )));
    }
    let mut correct = vec![0usize; num_steps + 1];
    for (i, (s, map)) in samples.iter().zip(maps).enumerate() {
        let label = s
            .label()
            .ok_or_else(|| Error::InvalidInput(format!("sample {i} has no label")))?;
        let inputs = curve_inputs(s.values(), map.scores(), baseline, mode, num_steps)?;
        let preds = classifier.score_batch(&inputs)?;
        for (k, p) in preds.iter().enumerate() {
            if argmax(p) == label {
                correct[k] += 1;
            }
        }
    }
    let n = samples.len() as f64;
    CausalCurve::new(
        fractions(num_steps),
        correct.into_iter().map(|c| c as f64 / n).collect(),
    )
}
