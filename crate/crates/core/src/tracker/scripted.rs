//! Deterministic trackers with known outputs, used as oracles for the
//! metrics and protocols.

use super::{not_initialized, Frame, Tracker};
use crate::dataset::{BoundingBox, Sequence};
use crate::error::Result;

/// Replays ground truth; holds the last ground-truth box where it is absent.
#[derive(Debug, Clone)]
pub struct OracleTracker {
    gt: Vec<Option<BoundingBox>>,
    last: Option<BoundingBox>,
}

impl OracleTracker {
    pub fn new(seq: &Sequence) -> Self {
        Self {
            gt: seq.boxes().to_vec(),
            last: None,
        }
    }
}

impl Tracker for OracleTracker {
    fn name(&self) -> &str {
        "oracle"
    }

    fn init(&mut self, _frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.last = Some(target);
        Ok(())
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        let last = self.last.ok_or_else(|| not_initialized("oracle"))?;
        let out = self
            .gt
            .get(frame.index())
            .copied()
            .flatten()
            .unwrap_or(last);
        self.last = Some(out);
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Reports the initialization box forever.
#[derive(Debug, Clone, Default)]
pub struct StaticTracker {
    init: Option<BoundingBox>,
}

impl StaticTracker {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Tracker for StaticTracker {
    fn name(&self) -> &str {
        "static"
    }

    fn init(&mut self, _frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.init = Some(target);
        Ok(())
    }

    fn update(&mut self, _frame: &Frame<'_>) -> Result<BoundingBox> {
        self.init.ok_or_else(|| not_initialized("static"))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Ground truth translated by a fixed offset.
#[derive(Debug, Clone)]
pub struct OffsetTracker {
    oracle: OracleTracker,
    dx: f64,
    dy: f64,
}

impl OffsetTracker {
    pub fn new(seq: &Sequence, dx: f64, dy: f64) -> Self {
        Self {
            oracle: OracleTracker::new(seq),
            dx,
            dy,
        }
    }
}

impl Tracker for OffsetTracker {
    fn name(&self) -> &str {
        "offset"
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.oracle.init(frame, target)
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        self.oracle.update(frame)?.translated(self.dx, self.dy)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Replays ground truth until frame `k`, then reports a box far outside the
/// frame from `k` on.
#[derive(Debug, Clone)]
pub struct FailAfterTracker {
    oracle: OracleTracker,
    fail_from: usize,
    far: Option<BoundingBox>,
}

impl FailAfterTracker {
    pub fn new(seq: &Sequence, fail_from: usize) -> Self {
        Self {
            oracle: OracleTracker::new(seq),
            fail_from,
            far: None,
        }
    }
}

impl Tracker for FailAfterTracker {
    fn name(&self) -> &str {
        "fail-after"
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        let shift = -1e6 - target.w().max(target.h());
        self.far = Some(target.translated(shift, shift)?);
        self.oracle.init(frame, target)
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        let gt = self.oracle.update(frame)?;
        if frame.index() >= self.fail_from {
            Ok(self.far.expect("set by init"))
        } else {
            Ok(gt)
        }
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NoFrames;

    fn seq() -> Sequence {
        let b = |x: f64| Some(BoundingBox::new(x, 0.0, 4.0, 4.0).unwrap());
        Sequence::builder("s", vec![b(0.0), b(1.0), None, b(3.0)])
            .build()
            .unwrap()
    }

    #[test]
    fn oracle_holds_last_gt_over_gaps() {
        let s = seq();
        let mut t = OracleTracker::new(&s);
        let src = NoFrames;
        assert!(t.update(&Frame::new(1, &src)).is_err());
        t.init(&Frame::new(0, &src), s.gt(0).unwrap()).unwrap();
        assert_eq!(t.update(&Frame::new(1, &src)).unwrap(), s.gt(1).unwrap());
        assert_eq!(t.update(&Frame::new(2, &src)).unwrap(), s.gt(1).unwrap());
        assert_eq!(t.update(&Frame::new(3, &src)).unwrap(), s.gt(3).unwrap());
    }

    #[test]
    fn offset_and_fail_after() {
        let s = seq();
        let src = NoFrames;
        let mut o = OffsetTracker::new(&s, 2.0, -1.0);
        o.init(&Frame::new(0, &src), s.gt(0).unwrap()).unwrap();
        assert_eq!(
            o.update(&Frame::new(1, &src)).unwrap().to_array(),
            [3.0, -1.0, 4.0, 4.0]
        );

        let mut f = FailAfterTracker::new(&s, 3);
        f.init(&Frame::new(0, &src), s.gt(0).unwrap()).unwrap();
        assert_eq!(f.update(&Frame::new(1, &src)).unwrap(), s.gt(1).unwrap());
        let far = f.update(&Frame::new(3, &src)).unwrap();
        assert_eq!(crate::metrics::iou(&far, &s.gt(3).unwrap()), 0.0);
    }

    #[test]
    fn static_repeats_init() {
        let src = NoFrames;
        let mut t = StaticTracker::new();
        let b = BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap();
        t.init(&Frame::new(0, &src), b).unwrap();
        for i in 1..5 {
            assert_eq!(t.update(&Frame::new(i, &src)).unwrap(), b);
        }
    }
}
