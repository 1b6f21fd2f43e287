use serde::{Deserialize, Serialize};

use crate::dataset::Sequence;
use crate::error::{Error, Result};

/// Anchor spacing in frames (two seconds at 60 FPS).
pub const ANCHOR_INTERVAL: usize = 120;

/// How far an anchor may move forward looking for an annotated frame.
pub const MAX_ANCHOR_SHIFT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// An initialization point of a multi-start run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub frame: usize,
    pub direction: Direction,
    /// Number of frames in the induced sub-sequence, the anchor included.
    pub span: usize,
}

impl Anchor {
    /// The anchor at `frame` of an `n`-frame sequence, run towards the longer
    /// side (forward on ties).
    pub fn at(frame: usize, n: usize) -> Self {
        let (forward, backward) = (n - frame, frame + 1);
        if forward >= backward {
            Anchor {
                frame,
                direction: Direction::Forward,
                span: forward,
            }
        } else {
            Anchor {
                frame,
                direction: Direction::Backward,
                span: backward,
            }
        }
    }

    /// Frames of the sub-sequence in presentation order.
    pub fn frames(&self) -> Vec<usize> {
        match self.direction {
            Direction::Forward => (self.frame..self.frame + self.span).collect(),
            Direction::Backward => (0..=self.frame).rev().collect(),
        }
    }
}

/// Anchors every `interval` frames plus the last frame, each moved forward
/// to the nearest annotated frame (at most [`MAX_ANCHOR_SHIFT`] frames) or
/// dropped, then deduplicated.
pub fn generate_anchors(seq: &Sequence, interval: usize) -> Result<Vec<Anchor>> {
    if interval == 0 {
        return Err(Error::Protocol("anchor interval must be positive".into()));
    }
    let n = seq.len();
    let mut frames: Vec<usize> = (0..n)
        .step_by(interval)
        .chain(std::iter::once(n - 1))
        .filter_map(|c| (c..=(c + MAX_ANCHOR_SHIFT).min(n - 1)).find(|&f| seq.gt(f).is_some()))
        .collect();
    frames.sort_unstable();
    frames.dedup();
    if frames.is_empty() {
        return Err(Error::sequence(
            seq.name(),
            "no frame qualifies as an anchor",
        ));
    }
    Ok(frames.into_iter().map(|f| Anchor::at(f, n)).collect())
}
