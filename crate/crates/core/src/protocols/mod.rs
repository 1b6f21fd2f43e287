//! Evaluation protocols: one-pass (OPE), multi-start (MSE) and real-time
//! (RTE), the runs they produce, and interaction-track scoring.

mod anchors;
mod runner;
mod storage;
mod tracks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use anchors::{generate_anchors, Anchor, Direction, ANCHOR_INTERVAL, MAX_ANCHOR_SHIFT};
pub use runner::{run_frames, run_mse, run_ope, run_protocol, run_rte, RteClock};
pub use storage::{load_runs, run_dir, run_stem};
pub use tracks::{
    interaction_track_score, interaction_tracks, parse_detections, Detection, HandState,
    InteractionTrack, TrackScores, TRACK_GAP, TRACK_IOU,
};

use crate::dataset::{BoundingBox, Sequence};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_run, Aggregation, RunScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ope,
    Mse,
    Rte,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Ope, Protocol::Mse, Protocol::Rte];

    /// How per-sequence scores are pooled over a dataset.
    pub fn aggregation(self) -> Aggregation {
        match self {
            Protocol::Mse => Aggregation::FrameWeighted,
            Protocol::Ope | Protocol::Rte => Aggregation::Mean,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ope => "ope",
            Protocol::Mse => "mse",
            Protocol::Rte => "rte",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ope" => Ok(Protocol::Ope),
            "mse" => Ok(Protocol::Mse),
            "rte" => Ok(Protocol::Rte),
            _ => Err(Error::Protocol(format!(
                "unknown protocol `{s}` (expected ope, mse or rte)"
            ))),
        }
    }
}

/// One execution of a tracker over a frame range of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerRun {
    pub protocol: Protocol,
    pub sequence: String,
    /// Frame count of the whole sequence.
    pub length: usize,
    /// Evaluated frames in presentation order.
    pub frames: Vec<usize>,
    /// One box per entry of `frames`.
    pub predictions: Vec<BoundingBox>,
    /// Frames the tracker actually ran on, initialization included.
    pub processed: Vec<usize>,
    /// Seconds spent on each processed frame.
    pub runtimes: Vec<f64>,
}

impl TrackerRun {
    /// The MSE anchor this run started from.
    pub fn anchor(&self) -> Option<Anchor> {
        (self.protocol == Protocol::Mse).then(|| Anchor::at(self.frames[0], self.length))
    }

    /// Number of `update` calls made.
    pub fn updates(&self) -> usize {
        self.processed.len().saturating_sub(1)
    }

    /// Predictions indexed by original frame number, `None` outside the
    /// evaluated range.
    pub fn predictions_by_frame(&self) -> Vec<Option<BoundingBox>> {
        let mut out = vec![None; self.length];
        for (&f, b) in self.frames.iter().zip(&self.predictions) {
            out[f] = Some(*b);
        }
        out
    }

    pub fn scores(&self, seq: &Sequence) -> Result<RunScores> {
        let mut s = evaluate_run(&self.predictions, seq, &self.frames)?;
        s.fps = measure_fps(self).ok();
        Ok(s)
    }
}

/// Processed frames per second of tracker time.
pub fn measure_fps(run: &TrackerRun) -> Result<f64> {
    fps_of(run.processed.len(), run.runtimes.iter().sum())
}

fn fps_of(frames: usize, seconds: f64) -> Result<f64> {
    if frames == 0 {
        return Err(Error::Undefined("no processed frames".into()));
    }
    if !(seconds > 0.0) {
        return Err(Error::Undefined("zero total runtime".into()));
    }
    Ok(frames as f64 / seconds)
}

/// Scores of one sequence from its runs: the single run for OPE and RTE,
/// the length-weighted combination of anchor runs for MSE.
pub fn sequence_scores(runs: &[TrackerRun], seq: &Sequence) -> Result<RunScores> {
    let scored = runs
        .iter()
        .map(|r| Ok((r.scores(seq)?, r.frames.len() as f64)))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<_> = scored.iter().map(|(s, w)| (s, *w)).collect();
    let mut out = RunScores::combine(&parts)?;
    let processed = runs.iter().map(|r| r.processed.len()).sum();
    let seconds = runs.iter().flat_map(|r| &r.runtimes).sum();
    out.fps = fps_of(processed, seconds).ok();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(processed: usize, each: f64) -> TrackerRun {
        TrackerRun {
            protocol: Protocol::Ope,
            sequence: "s".into(),
            length: processed,
            frames: (0..processed).collect(),
            predictions: vec![BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap(); processed],
            processed: (0..processed).collect(),
            runtimes: vec![each; processed],
        }
    }

    #[test]
    fn fps_examples() {
        assert!((measure_fps(&run(100, 0.02)).unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(measure_fps(&run(1, 0.5)).unwrap(), 2.0);
        assert!(measure_fps(&run(3, 0.0)).is_err());
    }

    #[test]
    fn protocol_names() {
        for p in Protocol::ALL {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert!("vot".parse::<Protocol>().is_err());
    }
}
