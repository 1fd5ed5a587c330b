use rayon::prelude::*;

use super::AttributionRequest;
use crate::data::{AttributionMap, Matrix};
use crate::error::{Error, Result};

/// Signed integrated gradients along the straight path from `baseline` to the sample,
/// using a right-endpoint Riemann sum with `steps` points.
pub fn integrated_gradients_signed(
    req: &AttributionRequest<'_>,
    baseline: &Matrix,
    steps: usize,
    target: usize,
) -> Result<Matrix> {
    req.validate()?;
    req.sample.ensure_shape(baseline.shape())?;
    if !req.classifier.supports_gradients() {
        return Err(Error::Unsupported(format!(
            "classifier '{}' does not expose gradients",
            req.classifier.id()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    let diff = req.sample.zip_map(baseline, |x, b| x - b)?;
    let grads: Vec<Matrix> = (1..=steps)
        .into_par_iter()
        .map(|k| {
            let alpha = k as f64 / steps as f64;
            let point = baseline.zip_map(&diff, |b, d| b + alpha * d)?;
            req.classifier.gradient(&point, target)
        })
        .collect::<Result<_>>()?;
    let mut total = Matrix::zeros(diff.shape());
    for g in &grads {
        for (acc, v) in total.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *acc += v;
        }
    }
    total.zip_map(&diff, |g, d| d * g / steps as f64)
}

/// Integrated gradients magnitude map.
pub fn integrated_gradients(
    req: &AttributionRequest<'_>,
    baseline: &Matrix,
    steps: usize,
) -> Result<AttributionMap> {
    req.validate()?;
    let target = req.resolve_target()?;
    let signed = integrated_gradients_signed(req, baseline, steps, target)?;
    AttributionMap::from_raw(&signed.map(f64::abs), "integrated_gradients", target)
}
