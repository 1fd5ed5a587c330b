//! Shared data model: matrices, samples, datasets and attribution maps.
//!
//! Every matrix is stored channel-major (row = channel, column = timestep).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub timesteps: usize,
}

impl Shape {
    pub const fn new(channels: usize, timesteps: usize) -> Self {
        Shape {
            channels,
            timesteps,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.timesteps
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.channels, self.timesteps)
    }
}

/// Dense real matrix of shape (channels, timesteps), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    shape: Shape,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(shape: Shape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Matrix {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::InvalidInput(format!(
                "matrix of shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Matrix { shape, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let channels = rows.len();
        let timesteps = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(channels * timesteps);
        for (c, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != timesteps {
                return Err(Error::InvalidInput(format!(
                    "row {c} has {} values, expected {timesteps}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            shape: Shape::new(channels, timesteps),
            data,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn timesteps(&self) -> usize {
        self.shape.timesteps
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.data[c * self.shape.timesteps + t]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, value: f64) {
        self.data[c * self.shape.timesteps + t] = value;
    }

    pub fn row(&self, c: usize) -> &[f64] {
        let t = self.shape.timesteps;
        &self.data[c * t..(c + 1) * t]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        let t = self.shape.timesteps;
        &mut self.data[c * t..(c + 1) * t]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.channels()).map(|c| self.row(c).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped matrices.
    pub fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        self.ensure_shape(other.shape)?;
        Ok(Matrix {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Sum over all entries of the elementwise product.
    pub fn dot(&self, other: &Matrix) -> Result<f64> {
        self.ensure_shape(other.shape)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Flat index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best / self.shape.timesteps, best % self.shape.timesteps)
    }

    pub fn ensure_shape(&self, expected: Shape) -> Result<()> {
        if self.shape != expected {
            return Err(Error::shape(expected, self.shape));
        }
        Ok(())
    }
}

/// One multivariate series with an optional class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSample {
    values: Matrix,
    label: Option<usize>,
}

impl TimeSeriesSample {
    pub fn new(values: Matrix, label: Option<usize>) -> Result<Self> {
        let shape = values.shape();
        if shape.channels == 0 || shape.timesteps == 0 {
            return Err(Error::InvalidInput(format!(
                "sample shape {shape} must have at least one channel and one timestep"
            )));
        }
        if !values.is_finite() {
            return Err(Error::InvalidInput("sample contains non-finite values".into()));
        }
        Ok(TimeSeriesSample { values, label })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn shape(&self) -> Shape {
        self.values.shape()
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }
}

/// A labelled collection of equally shaped samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    num_classes: usize,
    samples: Vec<TimeSeriesSample>,
    channel_means: Vec<f64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        num_classes: usize,
        samples: Vec<TimeSeriesSample>,
    ) -> Result<Self> {
        let channel_means = per_channel_means(&samples)?;
        let shape = samples[0].shape();
        for (i, s) in samples.iter().enumerate() {
            if s.shape() != shape {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has shape {}, dataset shape is {shape}",
                    s.shape()
                )));
            }
            if let Some(label) = s.label() {
                if label >= num_classes {
                    return Err(Error::InvalidInput(format!(
                        "sample {i} has label {label} but dataset has {num_classes} classes"
                    )));
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            num_classes,
            samples,
            channel_means,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[TimeSeriesSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.samples[0].shape()
    }

    pub fn channel_means(&self) -> &[f64] {
        &self.channel_means
    }

    /// Population standard deviation of every channel across all samples and timesteps.
    pub fn channel_stds(&self) -> Vec<f64> {
        let shape = self.shape();
        let n = (self.samples.len() * shape.timesteps) as f64;
        (0..shape.channels)
            .map(|c| {
                let mean = self.channel_means[c];
                let ss: f64 = self
                    .samples
                    .iter()
                    .flat_map(|s| s.values().row(c))
                    .map(|v| (v - mean).powi(2))
                    .sum();
                (ss / n).sqrt()
            })
            .collect()
    }

    /// A sample whose every channel is constant at the dataset channel mean.
    pub fn mean_sample(&self) -> Matrix {
        channel_constant(self.shape(), &self.channel_means)
    }

    /// New dataset restricted to the given sample indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples.get(i).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!("sample index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.name.clone(), self.num_classes, samples)
    }
}

/// Matrix whose channel `c` is filled with `per_channel[c]`.
pub fn channel_constant(shape: Shape, per_channel: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(shape);
    for c in 0..shape.channels {
        m.row_mut(c).fill(per_channel[c]);
    }
    m
}

/// Arithmetic mean of every channel over all samples and timesteps.
pub fn per_channel_means(samples: &[TimeSeriesSample]) -> Result<Vec<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("empty dataset".into()))?;
    let shape = first.shape();
    let mut sums = vec![0.0; shape.channels];
    for s in samples {
        s.values().ensure_shape(shape)?;
        for (c, sum) in sums.iter_mut().enumerate() {
            *sum += s.values().row(c).iter().sum::<f64>();
        }
    }
    let n = (samples.len() * shape.timesteps) as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Rescales `m` to [0, 1]. A constant matrix is reported as degenerate and mapped to zeros.
pub fn minmax_normalize(m: &Matrix) -> Result<(Matrix, bool)> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "cannot normalize a matrix with non-finite entries".into(),
        ));
    }
    let (lo, hi) = (m.min(), m.max());
    if hi > lo {
        let range = hi - lo;
        Ok((m.map(|v| (v - lo) / range), false))
    } else {
        Ok((Matrix::zeros(m.shape()), true))
    }
}

/// Per-feature importance scores for one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    scores: Matrix,
    degenerate: bool,
    method: String,
    target_class: usize,
}

impl AttributionMap {
    /// Normalizes raw scores into a map.
    pub fn from_raw(raw: &Matrix, method: impl Into<String>, target_class: usize) -> Result<Self> {
        let (scores, degenerate) = minmax_normalize(raw)?;
        Ok(AttributionMap {
            scores,
            degenerate,
            method: method.into(),
            target_class,
        })
    }

    /// Wraps already normalized scores, checking the map invariants.
    pub fn from_normalized(
        scores: Matrix,
        degenerate: bool,
        method: impl Into<String>,
        target_class: usize,
    ) -> Result<Self> {
        if degenerate {
            if scores.as_slice().iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidInput(
                    "degenerate attribution map must be all zeros".into(),
                ));
            }
        } else if !scores.is_finite()
            || scores.min() != 0.0
            || scores.max() != 1.0
            || scores.as_slice().iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidInput(
                "attribution map must span exactly [0, 1]".into(),
            ));
        }
        Ok(AttributionMap {
            scores,
            degenerate,
            method: method.into(),
            target_class,
        })
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn target_class(&self) -> usize {
        self.target_class
    }

    pub fn shape(&self) -> Shape {
        self.scores.shape()
    }
}
