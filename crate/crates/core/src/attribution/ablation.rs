//! Window-removal baselines: sliding-window occlusion and grouped feature ablation.

use super::{score_generated, AttributionRequest, Baseline};
use crate::classifiers::class_probability;
use crate::data::{AttributionMap, Matrix};
use crate::error::{Error, Result};

/// Start offsets of the occlusion windows along a series of length `timesteps`.
///
/// The last window may be partial so that every timestep is covered; the
/// count is `ceil((T - window) / stride) + 1`.
pub fn occlusion_windows(timesteps: usize, window: usize, stride: usize) -> Result<Vec<usize>> {
    if window == 0 || window > timesteps {
        return Err(Error::InvalidInput(format!(
            "window {window} outside [1, {timesteps}]"
        )));
    }
    if stride == 0 || stride > window {
        return Err(Error::InvalidInput(format!(
            "stride {stride} outside [1, {window}]"
        )));
    }
    let count = (timesteps - window).div_ceil(stride) + 1;
    Ok((0..count).map(|k| k * stride).collect())
}

/// Replaces `[start, end)` of channel `c` in every region and records the probability drop.
/// Each feature's raw score is the mean drop over the regions covering it.
fn region_drops(
    req: &AttributionRequest<'_>,
    regions: &[(usize, usize, usize)],
    baseline: Baseline,
    target: usize,
) -> Result<Matrix> {
    let shape = req.sample.shape();
    let reference = class_probability(req.classifier, req.sample, target)?;
    let probs = score_generated(req.classifier, regions.len(), target, |i| {
        let (c, start, end) = regions[i];
        let mut x = req.sample.clone();
        let fill = baseline.value(c, req.channel_means);
        x.row_mut(c)[start..end].fill(fill);
        Ok(x)
    })?;
    let mut total = Matrix::zeros(shape);
    let mut hits = Matrix::zeros(shape);
    for (&(c, start, end), p) in regions.iter().zip(probs) {
        let drop = reference - p;
        for t in start..end {
            total.set(c, t, total.get(c, t) + drop);
            hits.set(c, t, hits.get(c, t) + 1.0);
        }
    }
    total.zip_map(&hits, |s, n| if n > 0.0 { s / n } else { 0.0 })
}

/// Sliding-window occlusion, one channel at a time.
pub fn occlusion(
    req: &AttributionRequest<'_>,
    window: usize,
    stride: usize,
    baseline: Baseline,
) -> Result<AttributionMap> {
    req.validate()?;
    let shape = req.sample.shape();
    let starts = occlusion_windows(shape.timesteps, window, stride)?;
    let regions: Vec<_> = (0..shape.channels)
        .flat_map(|c| {
            starts
                .iter()
                .map(move |&s| (c, s, (s + window).min(shape.timesteps)))
        })
        .collect();
    let target = req.resolve_target()?;
    let raw = region_drops(req, &regions, baseline, target)?;
    AttributionMap::from_raw(&raw, "occlusion", target)
}

/// Ablates non-overlapping groups of `group_size` timesteps per channel.
pub fn feature_ablation(
    req: &AttributionRequest<'_>,
    group_size: usize,
    baseline: Baseline,
) -> Result<AttributionMap> {
    req.validate()?;
    let shape = req.sample.shape();
    if group_size == 0 || group_size > shape.timesteps {
        return Err(Error::InvalidInput(format!(
            "group size {group_size} outside [1, {}]",
            shape.timesteps
        )));
    }
    let regions: Vec<_> = (0..shape.channels)
        .flat_map(|c| {
            (0..shape.timesteps)
                .step_by(group_size)
                .map(move |s| (c, s, (s + group_size).min(shape.timesteps)))
        })
        .collect();
    let target = req.resolve_target()?;
    let raw = region_drops(req, &regions, baseline, target)?;
    AttributionMap::from_raw(&raw, "feature_ablation", target)
}
