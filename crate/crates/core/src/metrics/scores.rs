use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{gsr_curve, norm_precision_curve, success_curve, MeasureCurve, OverlapTrace};
use crate::dataset::{BoundingBox, Sequence};
use crate::error::{Error, Result};

/// Scores of one run (or an aggregate of runs) with the curves behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub ss: f64,
    pub nps: f64,
    pub gsr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub success: MeasureCurve,
    pub precision: MeasureCurve,
    pub robustness: MeasureCurve,
}

impl RunScores {
    pub fn from_trace(trace: &OverlapTrace) -> Result<Self> {
        let success = success_curve(trace)?;
        let precision = norm_precision_curve(trace)?;
        let robustness = gsr_curve(trace)?;
        Ok(Self {
            ss: success.auc(),
            nps: precision.auc(),
            gsr: robustness.auc(),
            fps: None,
            success,
            precision,
            robustness,
        })
    }

    /// Weighted combination: scores and every curve point are averaged with
    /// the same weights. FPS is left unset.
    pub fn combine(parts: &[(&RunScores, f64)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Undefined("combining zero score sets".into()))?
            .0;
        let pick = |f: fn(&RunScores) -> f64| -> Result<f64> {
            weighted_average(&parts.iter().map(|(s, w)| (f(s), *w)).collect::<Vec<_>>())
        };
        let curve = |f: fn(&RunScores) -> &MeasureCurve| -> Result<MeasureCurve> {
            let base = f(first);
            let values = (0..base.values.len())
                .map(|i| {
                    weighted_average(
                        &parts
                            .iter()
                            .map(|(s, w)| (f(s).values[i], *w))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MeasureCurve {
                thresholds: base.thresholds.clone(),
                values,
            })
        };
        Ok(Self {
            ss: pick(|s| s.ss)?,
            nps: pick(|s| s.nps)?,
            gsr: pick(|s| s.gsr)?,
            fps: None,
            success: curve(|s| &s.success)?,
            precision: curve(|s| &s.precision)?,
            robustness: curve(|s| &s.robustness)?,
        })
    }
}

/// Scores `predictions[i]` against the ground truth of frame `frames[i]`.
///
/// `frames` lists the evaluated frames in the order the tracker saw them; the
/// first one must carry ground truth since the tracker was initialized there.
pub fn evaluate_run(
    predictions: &[BoundingBox],
    seq: &Sequence,
    frames: &[usize],
) -> Result<RunScores> {
    let first = *frames
        .first()
        .ok_or_else(|| Error::Undefined("evaluating an empty frame range".into()))?;
    if seq.gt(first).is_none() {
        return Err(Error::Protocol(format!(
            "range of `{}` starts at frame {first} which has no ground truth",
            seq.name()
        )));
    }
    RunScores::from_trace(&OverlapTrace::build(predictions, seq, frames)?)
}

/// `Σ vᵢwᵢ / Σ wᵢ` over strictly positive weights.
pub fn weighted_average(scores: &[(f64, f64)]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Undefined("weighted average of an empty list".into()));
    }
    if let Some((_, w)) = scores.iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::Undefined(format!("non-positive weight {w}")));
    }
    let (num, den) = scores
        .iter()
        .fold((0.0, 0.0), |(n, d), (v, w)| (n + v * w, d + w));
    Ok(num / den)
}

/// How per-sequence scores are pooled into a dataset score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Every sequence counts once.
    Mean,
    /// Sequences weighted by their frame count.
    FrameWeighted,
}

impl Aggregation {
    pub fn weight(self, seq: &Sequence) -> f64 {
        match self {
            Aggregation::Mean => 1.0,
            Aggregation::FrameWeighted => seq.len() as f64,
        }
    }
}

/// Pools per-sequence scores with the given rule.
pub fn aggregate(results: &[(&Sequence, &RunScores)], rule: Aggregation) -> Result<RunScores> {
    let parts: Vec<_> = results
        .iter()
        .map(|(seq, s)| (*s, rule.weight(seq)))
        .collect();
    RunScores::combine(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKey {
    Attribute,
    Verb,
    Noun,
}

impl LabelKey {
    pub const ALL: [LabelKey; 3] = [LabelKey::Attribute, LabelKey::Verb, LabelKey::Noun];

    pub fn labels(self, seq: &Sequence) -> Vec<String> {
        match self {
            LabelKey::Attribute => seq
                .attributes()
                .iter()
                .map(|a| a.code().to_string())
                .collect(),
            LabelKey::Verb if !seq.verb().is_empty() => vec![seq.verb().to_string()],
            LabelKey::Noun if !seq.noun().is_empty() => vec![seq.noun().to_string()],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKey::Attribute => "attribute",
            LabelKey::Verb => "verb",
            LabelKey::Noun => "noun",
        })
    }
}

impl FromStr for LabelKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attribute" => Ok(LabelKey::Attribute),
            "verb" => Ok(LabelKey::Verb),
            "noun" => Ok(LabelKey::Noun),
            other => Err(Error::Protocol(format!(
                "unknown breakdown key `{other}` (expected attribute, verb or noun)"
            ))),
        }
    }
}

/// Per-label pooled scores over the sequences carrying each label.
pub fn breakdown_by_label(
    results: &[(&Sequence, &RunScores)],
    key: LabelKey,
    rule: Aggregation,
) -> Result<BTreeMap<String, RunScores>> {
    let mut groups: BTreeMap<String, Vec<(&Sequence, &RunScores)>> = BTreeMap::new();
    for &(seq, scores) in results {
        for label in key.labels(seq) {
            groups.entry(label).or_default().push((seq, scores));
        }
    }
    groups
        .into_iter()
        .map(|(label, members)| Ok((label, aggregate(&members, rule)?)))
        .collect()
}
