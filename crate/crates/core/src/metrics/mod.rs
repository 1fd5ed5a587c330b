//! Faithfulness, robustness and smoothness measures plus rank statistics.

mod causal;
mod continuity;
mod ranking;
mod robustness;
mod summary;

pub use causal::{
    causal_curve, deletion_curve, feature_ranking, insertion_curve, subset_accuracy_curve,
    trapezoid, CausalCurve, CurveMode, DEFAULT_CURVE_STEPS,
};
pub use continuity::{continuity, Continuity};
pub use ranking::{
    average_ranks, critical_difference, friedman_statistic, nemenyi_q, rank_row,
};
pub use robustness::{
    infidelity, scaled_stds, sensitivity_max, DEFAULT_INFIDELITY_PERTURBATIONS,
    DEFAULT_NOISE_SCALE, DEFAULT_RADIUS_SCALE, DEFAULT_SENSITIVITY_PERTURBATIONS,
};
pub use summary::{friedman_ranks, rank_report, Direction, Metric, MetricCell, MetricSummary};
