use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{score_generated, AttributionRequest, Perturbation};
use crate::data::{AttributionMap, Matrix};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const MASK_STREAM: u64 = 0x4c49_4d45;

/// Ridge coefficients of the local linear surrogate, one per feature.
///
/// The intercept is fitted by centering and is not penalized.
pub(crate) fn lime_coefficients(
    req: &AttributionRequest<'_>,
    n_samples: usize,
    mask_density: f64,
    ridge_lambda: f64,
    target: usize,
) -> Result<Matrix> {
    req.validate()?;
    if n_samples < 2 {
        return Err(Error::InvalidInput("lime needs at least 2 samples".into()));
    }
    if !(0.0..=1.0).contains(&mask_density) {
        return Err(Error::InvalidInput(format!(
            "mask density {mask_density} outside [0, 1]"
        )));
    }
    if !(ridge_lambda > 0.0 && ridge_lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "ridge lambda must be positive, got {ridge_lambda}"
        )));
    }
    let shape = req.sample.shape();
    let d = shape.len();
    if n_samples < d {
        warn!("lime: {n_samples} samples for {d} features; the surrogate is underdetermined");
    }

    let mut rng = stream_rng(req.seed, MASK_STREAM);
    let masks: Vec<Matrix> = (0..n_samples)
        .map(|_| {
            let bits = (0..d)
                .map(|_| f64::from(u8::from(rng.random::<f64>() < mask_density)))
                .collect();
            Matrix::from_vec(shape, bits)
        })
        .collect::<Result<_>>()?;
    let probs = score_generated(req.classifier, n_samples, target, |i| {
        Perturbation::MeanReplace.apply(req.sample, &masks[i], req.channel_means)
    })?;

    let mut z = DMatrix::from_fn(n_samples, d, |i, j| masks[i].as_slice()[j]);
    for j in 0..d {
        let mean = z.column(j).mean();
        z.column_mut(j).add_scalar_mut(-mean);
    }
    let y_mean = probs.iter().sum::<f64>() / n_samples as f64;
    let y = DVector::from_iterator(n_samples, probs.iter().map(|p| p - y_mean));

    let mut gram = z.tr_mul(&z);
    for j in 0..d {
        gram[(j, j)] += ridge_lambda;
    }
    let rhs = z.tr_mul(&y);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("ridge system is not positive definite".into()))?;
    let coef = chol.solve(&rhs);
    Matrix::from_vec(shape, coef.iter().copied().collect())
}

/// Local linear surrogate over binary keep/replace indicators.
pub fn lime_surrogate(
    req: &AttributionRequest<'_>,
    n_samples: usize,
    mask_density: f64,
    ridge_lambda: f64,
) -> Result<AttributionMap> {
    req.validate()?;
    let target = req.resolve_target()?;
    let raw = lime_coefficients(req, n_samples, mask_density, ridge_lambda, target)?;
    AttributionMap::from_raw(&raw, "lime", target)
}
