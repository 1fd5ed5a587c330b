//! Random soft-mask generation over multiple densities and granularities.
//!
//! A mask is drawn on a coarse time grid of `g` cells per channel, thresholded
//! at density `p`, linearly upsampled along time to `(g + 1) * ceil(T / g)`
//! and cropped back to `T` at a random offset. Channels are never mixed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Shape};
use crate::error::{Error, Result};
use crate::rng::{stream_id, stream_rng};

/// Lower bound applied to per-feature occurrence before dividing by it.
pub const OCCURRENCE_FLOOR: f64 = 1e-12;

/// Parameters of a mask set. The set holds `|densities| * |granularities| * per_combo_count` masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskGenSpec {
    pub densities: Vec<f64>,
    pub granularities: Vec<usize>,
    pub per_combo_count: usize,
    /// One time grid shared by all channels instead of one grid per channel.
    pub channel_joint: bool,
    pub seed: u64,
}

impl MaskGenSpec {
    /// Densities 0.1..=0.9, granularities {T/16, T/8, T/4} (rounded up), 32 masks each.
    pub fn default_for(timesteps: usize, seed: u64) -> Self {
        let mut granularities: Vec<usize> = [16, 8, 4]
            .iter()
            .map(|div| timesteps.div_ceil(*div).clamp(1, timesteps.max(1)))
            .collect();
        granularities.dedup();
        MaskGenSpec {
            densities: (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            granularities,
            per_combo_count: 32,
            channel_joint: false,
            seed,
        }
    }

    pub fn total_masks(&self) -> usize {
        self.densities.len() * self.granularities.len() * self.per_combo_count
    }

    pub fn validate(&self, shape: Shape) -> Result<()> {
        if self.densities.is_empty() || self.granularities.is_empty() {
            return Err(Error::InvalidSpec(
                "densities and granularities must be non-empty".into(),
            ));
        }
        if self.per_combo_count == 0 {
            return Err(Error::InvalidSpec("per_combo_count must be at least 1".into()));
        }
        for &p in &self.densities {
            check_density(p)?;
        }
        for &g in &self.granularities {
            check_granularity(g, shape.timesteps)?;
        }
        Ok(())
    }
}

fn check_density(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidSpec(format!("density {p} outside (0, 1]")));
    }
    Ok(())
}

fn check_granularity(g: usize, timesteps: usize) -> Result<()> {
    if g == 0 || g > timesteps {
        return Err(Error::InvalidSpec(format!(
            "granularity {g} outside [1, {timesteps}]"
        )));
    }
    Ok(())
}

/// Canonical position of a mask inside its set: (density index, granularity index, draw index).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MaskKey {
    pub density_index: usize,
    pub granularity_index: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    values: Matrix,
    density: f64,
    granularity: usize,
    key: MaskKey,
}

impl Mask {
    pub fn new(values: Matrix, density: f64, granularity: usize, key: MaskKey) -> Result<Self> {
        if values
            .as_slice()
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidInput("mask entries must lie in [0, 1]".into()));
        }
        Ok(Mask {
            values,
            density,
            granularity,
            key,
        })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn granularity(&self) -> usize {
        self.granularity
    }

    pub fn key(&self) -> MaskKey {
        self.key
    }

    pub fn shape(&self) -> Shape {
        self.values.shape()
    }
}

/// Draws a single mask of the given shape.
pub fn generate_mask<R: Rng + ?Sized>(
    shape: Shape,
    density: f64,
    granularity: usize,
    rng: &mut R,
    channel_joint: bool,
) -> Result<Mask> {
    check_density(density)?;
    check_granularity(granularity, shape.timesteps)?;

    let grid_rows = if channel_joint { 1 } else { shape.channels };
    let grid: Vec<f64> = (0..grid_rows * granularity)
        .map(|_| if rng.random::<f64>() < density { 1.0 } else { 0.0 })
        .collect();

    let cell_len = shape.timesteps.div_ceil(granularity);
    let upsampled_len = (granularity + 1) * cell_len;
    let offset = rng.random_range(0..cell_len);

    let mut values = Matrix::zeros(shape);
    let scale = granularity as f64 / upsampled_len as f64;
    let last = (granularity - 1) as f64;
    for c in 0..shape.channels {
        let cells = if channel_joint {
            &grid[..granularity]
        } else {
            &grid[c * granularity..(c + 1) * granularity]
        };
        for (t, out) in values.row_mut(c).iter_mut().enumerate() {
            // Pixel-centre alignment, clamped at the grid edges.
            let src = ((offset + t) as f64 + 0.5) * scale - 0.5;
            let src = src.clamp(0.0, last);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(granularity - 1);
            let frac = src - lo as f64;
            *out = cells[lo] * (1.0 - frac) + cells[hi] * frac;
        }
    }
    Mask::new(values, density, granularity, MaskKey::default())
}

/// Ordered set of masks with per-feature occurrence totals.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    shape: Shape,
    spec: MaskGenSpec,
    masks: Vec<Mask>,
    occurrence: Matrix,
}

impl MaskSet {
    /// Assembles a mask set, checking cardinality and shapes and recomputing occurrence.
    pub fn from_parts(shape: Shape, spec: MaskGenSpec, masks: Vec<Mask>) -> Result<Self> {
        spec.validate(shape)?;
        if masks.len() != spec.total_masks() {
            return Err(Error::InvalidInput(format!(
                "mask set needs {} masks, got {}",
                spec.total_masks(),
                masks.len()
            )));
        }
        for m in &masks {
            m.values().ensure_shape(shape)?;
        }
        let mut order: Vec<usize> = (0..masks.len()).collect();
        order.sort_by_key(|&i| masks[i].key());
        if order.windows(2).any(|w| masks[w[0]].key() == masks[w[1]].key()) {
            return Err(Error::InvalidInput("duplicate mask keys".into()));
        }
        let mut occurrence = Matrix::zeros(shape);
        for &i in &order {
            for (acc, v) in occurrence
                .as_mut_slice()
                .iter_mut()
                .zip(masks[i].values().as_slice())
            {
                *acc += v;
            }
        }
        let uncovered = occurrence
            .as_slice()
            .iter()
            .filter(|&&v| v < OCCURRENCE_FLOOR)
            .count();
        if uncovered > 0 {
            log::warn!(
                "{uncovered} feature(s) never covered by any mask; occurrence clamped to {OCCURRENCE_FLOOR}"
            );
        }
        Ok(MaskSet {
            shape,
            spec,
            masks,
            occurrence,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn spec(&self) -> &MaskGenSpec {
        &self.spec
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Elementwise sum of all mask values.
    pub fn occurrence(&self) -> &Matrix {
        &self.occurrence
    }

    /// Indices of the masks sorted by canonical key.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.masks.len()).collect();
        order.sort_by_key(|&i| self.masks[i].key());
        order
    }

    pub fn into_masks(self) -> Vec<Mask> {
        self.masks
    }
}

/// Generates the full mask set in (density, granularity, index) order.
pub fn generate_maskset(shape: Shape, spec: &MaskGenSpec) -> Result<MaskSet> {
    spec.validate(shape)?;
    let keys: Vec<MaskKey> = (0..spec.densities.len())
        .flat_map(|pi| {
            (0..spec.granularities.len()).flat_map(move |gi| {
                (0..spec.per_combo_count).map(move |index| MaskKey {
                    density_index: pi,
                    granularity_index: gi,
                    index,
                })
            })
        })
        .collect();
    let masks = keys
        .par_iter()
        .map(|&key| {
            let mut rng = stream_rng(
                spec.seed,
                stream_id(key.density_index, key.granularity_index, key.index),
            );
            let p = spec.densities[key.density_index];
            let g = spec.granularities[key.granularity_index];
            let mask = generate_mask(shape, p, g, &mut rng, spec.channel_joint)?;
            Ok(Mask { key, ..mask })
        })
        .collect::<Result<Vec<_>>>()?;
    MaskSet::from_parts(shape, spec.clone(), masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_density_is_all_ones() {
        let mut rng = stream_rng(0, 0);
        let m = generate_mask(Shape::new(1, 4), 1.0, 4, &mut rng, false).unwrap();
        assert!(m.values().as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn vanishing_density_is_all_zeros() {
        let mut rng = stream_rng(1, 0);
        let m = generate_mask(Shape::new(3, 50), 1e-9, 10, &mut rng, false).unwrap();
        assert!(m.values().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn monte_carlo_mean_matches_density() {
        // Straight sample mean over 500 masks.
        let mut rng = stream_rng(42, 0);
        let mut total = 0.0;
        for _ in 0..500 {
            let m = generate_mask(Shape::new(3, 50), 0.3, 5, &mut rng, false).unwrap();
            total += m.values().mean();
        }
        let mean = total / 500.0;
        assert!((0.25..=0.35).contains(&mean), "mean {mean}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = stream_rng(0, 0);
        let shape = Shape::new(1, 10);
        assert!(matches!(
            generate_mask(shape, 0.0, 2, &mut rng, false),
            Err(Error::InvalidSpec(_))
        ));
        assert!(generate_mask(shape, 1.5, 2, &mut rng, false).is_err());
        assert!(generate_mask(shape, 0.5, 11, &mut rng, false).is_err());
        assert!(generate_mask(shape, 0.5, 0, &mut rng, false).is_err());
    }

    #[test]
    fn maskset_cardinality_and_shape() {
        let spec = MaskGenSpec {
            densities: vec![0.1, 0.5],
            granularities: vec![5, 10],
            per_combo_count: 25,
            channel_joint: false,
            seed: 3,
        };
        let set = generate_maskset(Shape::new(3, 50), &spec).unwrap();
        assert_eq!(set.len(), 100);
        assert!(set.masks().iter().all(|m| m.shape() == Shape::new(3, 50)));
        // p-major, then g, then index.
        assert_eq!(set.masks()[0].key(), MaskKey::default());
        assert_eq!(set.masks()[26].key().granularity_index, 1);
        assert_eq!(set.masks()[50].key().density_index, 1);
    }

    #[test]
    fn maskset_is_deterministic() {
        let spec = MaskGenSpec::default_for(50, 7);
        let a = generate_maskset(Shape::new(3, 50), &spec).unwrap();
        let b = generate_maskset(Shape::new(3, 50), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_full_mask_occurrence_is_one() {
        let spec = MaskGenSpec {
            densities: vec![1.0],
            granularities: vec![1],
            per_combo_count: 1,
            channel_joint: false,
            seed: 0,
        };
        let set = generate_maskset(Shape::new(2, 9), &spec).unwrap();
        assert!(set.occurrence().as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn default_spec_for_anomaly_length() {
        let spec = MaskGenSpec::default_for(50, 0);
        assert_eq!(spec.granularities, vec![4, 7, 13]);
        assert_eq!(spec.total_masks(), 9 * 3 * 32);
        assert_eq!(MaskGenSpec::default_for(3, 0).granularities, vec![1]);
    }

    #[test]
    fn channel_joint_masks_repeat_across_channels() {
        let mut rng = stream_rng(5, 0);
        let m = generate_mask(Shape::new(3, 20), 0.5, 4, &mut rng, true).unwrap();
        assert_eq!(m.values().row(0), m.values().row(1));
        assert_eq!(m.values().row(0), m.values().row(2));
    }

    #[test]
    fn channels_are_independent() {
        let mut rng = stream_rng(11, 0);
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let n = 2000.0;
        for _ in 0..2000 {
            let m = generate_mask(Shape::new(2, 20), 0.5, 4, &mut rng, false).unwrap();
            let (x, y) = (m.values().get(0, 7), m.values().get(1, 7));
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let cov = sxy / n - sx / n * sy / n;
        let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
        assert!(corr.abs() < 0.05, "corr {corr}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn masks_keep_shape_and_range(
            c in 1usize..4,
            t in 1usize..60,
            p in 0.05f64..=1.0,
            g_frac in 0.0f64..1.0,
            seed in any::<u64>(),
            joint in any::<bool>(),
        ) {
            let g = 1 + ((t - 1) as f64 * g_frac) as usize;
            let mut rng = stream_rng(seed, 0);
            let m = generate_mask(Shape::new(c, t), p, g, &mut rng, joint).unwrap();
            prop_assert_eq!(m.shape(), Shape::new(c, t));
            prop_assert!(m.values().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
