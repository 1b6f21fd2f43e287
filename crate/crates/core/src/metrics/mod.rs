//! Overlap primitives, measure curves, scores and their aggregation.

mod curves;
mod overlap;
mod scores;

pub use curves::{
    gsr_curve, norm_precision_curve, precision_thresholds, robustness_thresholds, success_curve,
    success_thresholds, MeasureCurve, PRECISION_POINTS, ROBUSTNESS_POINTS, SUCCESS_POINTS,
};
pub use overlap::{iou, norm_center_distance, OverlapTrace};
pub use scores::{
    aggregate, breakdown_by_label, evaluate_run, weighted_average, Aggregation, LabelKey, RunScores,
};
