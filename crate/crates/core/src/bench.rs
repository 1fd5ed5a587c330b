//! Measurement helpers: forward-pass counting, timing and linear fits.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::classifiers::Classifier;
use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};

/// Wraps a classifier and counts every sample it scores.
pub struct CallCountingClassifier<'a> {
    inner: &'a dyn Classifier,
    count: AtomicU64,
}

impl<'a> CallCountingClassifier<'a> {
    pub fn new(inner: &'a dyn Classifier) -> Self {
        CallCountingClassifier {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

impl Classifier for CallCountingClassifier<'_> {
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn input_shape(&self) -> Shape {
        self.inner.input_shape()
    }

    fn id(&self) -> String {
        self.inner.id()
    }

    fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.score(x)
    }

    fn score_batch(&self, xs: &[Matrix]) -> Result<Vec<Vec<f64>>> {
        self.count.fetch_add(xs.len() as u64, Ordering::Relaxed);
        self.inner.score_batch(xs)
    }

    fn supports_gradients(&self) -> bool {
        self.inner.supports_gradients()
    }

    fn gradient(&self, x: &Matrix, class: usize) -> Result<Matrix> {
        self.inner.gradient(x, class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares. Constant `ys` fit exactly and report R² = 1.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} xs but {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput("linear fit needs at least 3 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all xs are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

pub const TIMING_REPEATS: usize = 5;

/// Median wall-clock time of `f` over `TIMING_REPEATS` runs after one discarded warm-up.
/// Returns the duration and the value of the last run.
pub fn time_median<T>(mut f: impl FnMut() -> Result<T>) -> Result<(Duration, T)> {
    let mut last = f()?;
    let mut times = Vec::with_capacity(TIMING_REPEATS);
    for _ in 0..TIMING_REPEATS {
        let start = Instant::now();
        last = f()?;
        times.push(start.elapsed());
    }
    times.sort();
    Ok((times[TIMING_REPEATS / 2], last))
}
