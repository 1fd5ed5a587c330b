use super::{score_generated, AttributionRequest, Perturbation};
use crate::data::{AttributionMap, Matrix};
use crate::error::{Error, Result};
use crate::masks::{MaskSet, OCCURRENCE_FLOOR};

pub const METHOD: &str = "timereise";

/// Occurrence-normalized score-weighted mask sum, before min-max scaling.
///
/// Performs exactly `masks.len()` forward passes. Accumulation follows the
/// canonical mask-key order, so the result does not depend on the order of
/// the masks in the set or on scheduling.
pub fn timereise_raw(
    req: &AttributionRequest<'_>,
    masks: &MaskSet,
    perturbation: Perturbation,
    target: usize,
) -> Result<Matrix> {
    req.validate()?;
    if masks.is_empty() {
        return Err(Error::InvalidInput("mask set is empty".into()));
    }
    req.sample.ensure_shape(masks.shape())?;

    let scores = score_generated(req.classifier, masks.len(), target, |i| {
        perturbation.apply(req.sample, masks.masks()[i].values(), req.channel_means)
    })?;

    let mut weighted = Matrix::zeros(masks.shape());
    for i in masks.canonical_order() {
        let s = scores[i];
        for (acc, m) in weighted
            .as_mut_slice()
            .iter_mut()
            .zip(masks.masks()[i].values().as_slice())
        {
            *acc += s * m;
        }
    }
    weighted.zip_map(masks.occurrence(), |r, occ| r / occ.max(OCCURRENCE_FLOOR))
}

/// Randomized-mask attribution over a precomputed mask set.
pub fn timereise(
    req: &AttributionRequest<'_>,
    masks: &MaskSet,
    perturbation: Perturbation,
) -> Result<AttributionMap> {
    let target = req.resolve_target()?;
    let raw = timereise_raw(req, masks, perturbation, target)?;
    AttributionMap::from_raw(&raw, METHOD, target)
}
