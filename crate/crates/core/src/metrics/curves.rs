use serde::{Deserialize, Serialize};

use super::OverlapTrace;
use crate::error::{Error, Result};

/// Success plot: 21 overlap thresholds over `[0, 1]`.
pub const SUCCESS_POINTS: usize = 21;
/// Normalized precision plot: 51 distance thresholds over `[0, 0.5]`.
pub const PRECISION_POINTS: usize = 51;
/// Generalized success robustness plot: 51 failure thresholds over `[0, 0.5]`.
pub const ROBUSTNESS_POINTS: usize = 51;

pub fn success_thresholds() -> Vec<f64> {
    (0..SUCCESS_POINTS).map(|i| i as f64 / 20.0).collect()
}

pub fn precision_thresholds() -> Vec<f64> {
    (0..PRECISION_POINTS).map(|i| i as f64 / 100.0).collect()
}

pub fn robustness_thresholds() -> Vec<f64> {
    (0..ROBUSTNESS_POINTS).map(|i| i as f64 / 100.0).collect()
}

/// A threshold-indexed curve whose summary score is the mean of its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl MeasureCurve {
    /// Area under the curve for uniformly spaced thresholds: the arithmetic
    /// mean of the values.
    pub fn auc(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// CSV with header `threshold,value`, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,value\n");
        for (t, v) in self.thresholds.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

fn present(values: &[Option<f64>], what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return Err(Error::Undefined(format!("no frame with a defined {what}")));
    }
    Ok(v)
}

/// Fraction of present overlaps at or above each threshold.
pub fn success_curve(trace: &OverlapTrace) -> Result<MeasureCurve> {
    let overlaps = present(&trace.overlaps, "overlap")?;
    let n = overlaps.len() as f64;
    let thresholds = success_thresholds();
    let values = thresholds
        .iter()
        .map(|&t| overlaps.iter().filter(|&&o| o >= t).count() as f64 / n)
        .collect();
    Ok(MeasureCurve { thresholds, values })
}

/// Fraction of present normalized center distances within each threshold.
pub fn norm_precision_curve(trace: &OverlapTrace) -> Result<MeasureCurve> {
    let distances = present(&trace.distances, "center distance")?;
    let n = distances.len() as f64;
    let thresholds = precision_thresholds();
    let values = thresholds
        .iter()
        .map(|&t| distances.iter().filter(|&&d| d <= t).count() as f64 / n)
        .collect();
    Ok(MeasureCurve { thresholds, values })
}

/// Normalized extent of the trace before the first frame whose overlap drops
/// below each threshold. Frames without ground truth never fail but count in
/// the trace length.
pub fn gsr_curve(trace: &OverlapTrace) -> Result<MeasureCurve> {
    if trace.is_empty() {
        return Err(Error::Undefined("robustness of an empty trace".into()));
    }
    let n = trace.len() as f64;
    let thresholds = robustness_thresholds();
    let values = thresholds
        .iter()
        .map(|&t| {
            trace
                .overlaps
                .iter()
                .position(|o| matches!(o, Some(o) if *o < t))
                .map_or(1.0, |i| i as f64 / n)
        })
        .collect();
    Ok(MeasureCurve { thresholds, values })
}
