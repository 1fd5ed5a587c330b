use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attribution::score_generated;
use crate::classifiers::{class_probability, Classifier};
use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_INFIDELITY_PERTURBATIONS: usize = 1000;
pub const DEFAULT_SENSITIVITY_PERTURBATIONS: usize = 10;
/// Infidelity noise as a multiple of each channel's standard deviation.
pub const DEFAULT_NOISE_SCALE: f64 = 0.3;
/// Sensitivity radius as a multiple of each channel's standard deviation.
pub const DEFAULT_RADIUS_SCALE: f64 = 0.02;
const NORM_FLOOR: f64 = 1e-12;

fn check_per_channel(name: &str, shape: Shape, values: &[f64]) -> Result<()> {
    if values.len() != shape.channels {
        return Err(Error::InvalidInput(format!(
            "{name}: {} values for {} channels",
            values.len(),
            shape.channels
        )));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("{name} must be positive")));
    }
    Ok(())
}

fn gaussian_noise(shape: Shape, sigma: &[f64], seed: u64, index: usize) -> Matrix {
    let mut rng = stream_rng(seed, index as u64);
    let mut m = Matrix::zeros(shape);
    for (c, s) in sigma.iter().enumerate() {
        for v in m.row_mut(c) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = s * z;
        }
    }
    m
}

/// Monte Carlo infidelity of `phi` for the `target` probability.
///
/// Averages `(<I, phi> - (P(x) - P(x - I)))^2` over `n_pert` draws of
/// Gaussian noise `I` with per-channel standard deviation `noise_sigma`.
pub fn infidelity(
    sample: &Matrix,
    phi: &Matrix,
    classifier: &dyn Classifier,
    target: usize,
    n_pert: usize,
    noise_sigma: &[f64],
    seed: u64,
) -> Result<f64> {
    sample.ensure_shape(phi.shape())?;
    check_per_channel("noise_sigma", sample.shape(), noise_sigma)?;
    if n_pert == 0 {
        return Err(Error::InvalidInput("n_pert must be at least 1".into()));
    }
    let shape = sample.shape();
    let reference = class_probability(classifier, sample, target)?;
    let perturbed = score_generated(classifier, n_pert, target, |i| {
        let noise = gaussian_noise(shape, noise_sigma, seed, i);
        sample.zip_map(&noise, |x, n| x - n)
    })?;
    let mut total = 0.0;
    for (i, p) in perturbed.iter().enumerate() {
        let noise = gaussian_noise(shape, noise_sigma, seed, i);
        let predicted = noise.dot(phi)?;
        let err = predicted - (reference - p);
        total += err * err;
    }
    Ok(total / n_pert as f64)
}

/// Worst relative change of an attribution map under small uniform input noise.
///
/// `attribution` is recomputed for every perturbed input; it should keep
/// its own randomness fixed so that only the input varies.
pub fn sensitivity_max<F>(
    sample: &Matrix,
    attribution: F,
    radius: &[f64],
    n_pert: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&Matrix) -> Result<Matrix>,
{
    check_per_channel("radius", sample.shape(), radius)?;
    let reference = attribution(sample)?;
    sample.ensure_shape(reference.shape())?;
    let denom = reference.l2_norm().max(NORM_FLOOR);
    let mut worst = 0.0f64;
    for i in 0..n_pert {
        let mut rng = stream_rng(seed, i as u64);
        let mut x = sample.clone();
        for (c, r) in radius.iter().enumerate() {
            for v in x.row_mut(c) {
                *v += rng.random_range(-r..=*r);
            }
        }
        let phi = attribution(&x)?;
        let diff = phi.zip_map(&reference, |a, b| a - b)?;
        worst = worst.max(diff.l2_norm() / denom);
    }
    Ok(worst)
}

/// Scales per-channel standard deviations, keeping the result strictly positive.
pub fn scaled_stds(stds: &[f64], factor: f64) -> Vec<f64> {
    stds.iter()
        .map(|s| (s * factor).max(f64::MIN_POSITIVE))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{timereise, AttributionRequest, Perturbation, Target};
    use crate::classifiers::{LinearProbabilityClassifier, OracleAnomalyClassifier};
    use crate::masks::{generate_maskset, MaskGenSpec};

    fn probe(shape: Shape) -> Matrix {
        Matrix::from_vec(
            shape,
            (0..shape.len()).map(|i| (i as f64 * 0.61).sin()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn linear_stub_with_its_weights_has_zero_infidelity() {
        let shape = Shape::new(2, 6);
        let w = Matrix::from_vec(shape, (0..12).map(|i| 0.001 * (i as f64 - 5.5)).collect())
            .unwrap();
        let c = LinearProbabilityClassifier::new(w.clone(), 0.5);
        let x = probe(shape);
        let v = infidelity(&x, &w, &c, 1, 500, &[1.0, 2.0], 9).unwrap();
        assert!(v <= 1e-10, "{v}");
    }

    #[test]
    fn vanishing_noise_has_vanishing_infidelity() {
        let shape = Shape::new(3, 10);
        let c = OracleAnomalyClassifier::new(shape);
        let x = probe(shape);
        let phi = x.map(f64::abs);
        let v = infidelity(&x, &phi, &c, 1, 100, &[1e-12; 3], 1).unwrap();
        assert!(v <= 1e-12);
    }

    #[test]
    fn infidelity_is_seeded() {
        let shape = Shape::new(1, 8);
        let c = OracleAnomalyClassifier::new(shape);
        let x = probe(shape);
        let phi = Matrix::filled(shape, 0.1);
        let a = infidelity(&x, &phi, &c, 1, 50, &[0.3], 4).unwrap();
        let b = infidelity(&x, &phi, &c, 1, 50, &[0.3], 4).unwrap();
        assert_eq!(a, b);
        assert!(infidelity(&x, &phi, &c, 1, 50, &[0.0], 4).is_err());
        assert!(infidelity(&x, &phi, &c, 1, 0, &[0.3], 4).is_err());
    }

    #[test]
    fn input_ignoring_attribution_has_zero_sensitivity() {
        let shape = Shape::new(2, 5);
        let fixed = probe(shape).map(f64::abs);
        let v = sensitivity_max(&probe(shape), |_| Ok(fixed.clone()), &[0.5, 0.5], 10, 3).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn vanishing_radius_has_vanishing_sensitivity() {
        let shape = Shape::new(1, 16);
        let c = OracleAnomalyClassifier::new(shape);
        let mut x = probe(shape);
        x.set(0, 5, 7.0);
        let masks = generate_maskset(
            shape,
            &MaskGenSpec {
                densities: vec![0.3, 0.6],
                granularities: vec![2, 4],
                per_combo_count: 8,
                channel_joint: false,
                seed: 2,
            },
        )
        .unwrap();
        let f = |input: &Matrix| {
            let req = AttributionRequest::new(input, &c, &[0.0]).with_target(Target::Class(1));
            Ok(timereise(&req, &masks, Perturbation::Multiply)?.scores().clone())
        };
        let v = sensitivity_max(&x, f, &[1e-15], 10, 0).unwrap();
        assert!(v <= 1e-6, "{v}");
    }
}
