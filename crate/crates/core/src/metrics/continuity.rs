use serde::{Deserialize, Serialize};

use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Continuity {
    /// Sum of absolute differences between temporal neighbours.
    pub total: f64,
    /// `total / (C * (T - 1))`.
    pub normalized: f64,
}

/// Temporal roughness of a map; zero for series shorter than two steps.
pub fn continuity(scores: &Matrix) -> Continuity {
    let (c, t) = (scores.channels(), scores.timesteps());
    if t < 2 {
        return Continuity {
            total: 0.0,
            normalized: 0.0,
        };
    }
    let total: f64 = (0..c)
        .map(|ch| {
            scores
                .row(ch)
                .windows(2)
                .map(|w| (w[0] - w[1]).abs())
                .sum::<f64>()
        })
        .sum();
    Continuity {
        total,
        normalized: total / (c * (t - 1)) as f64,
    }
}
