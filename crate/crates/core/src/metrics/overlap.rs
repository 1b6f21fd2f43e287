use crate::dataset::{BoundingBox, Sequence};
use crate::error::{Error, Result};

/// Intersection over union of two boxes, in `[0, 1]`.
///
/// Areas are taken from the corner coordinates so that identical boxes give
/// exactly 1.0 and uniformly scaled integer boxes give bit-identical results.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x().max(b.x());
    let ih = a.bottom().min(b.bottom()) - a.y().max(b.y());
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let area_a = (a.right() - a.x()) * (a.bottom() - a.y());
    let area_b = (b.right() - b.x()) * (b.bottom() - b.y());
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Center error with each axis normalized by the ground-truth extent.
pub fn norm_center_distance(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let (px, py) = pred.center();
    let (gx, gy) = gt.center();
    ((px - gx) / gt.w()).hypot((py - gy) / gt.h())
}

/// Per-frame overlap and normalized center distance, in presentation order.
/// Both are absent exactly where ground truth is absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlapTrace {
    pub overlaps: Vec<Option<f64>>,
    pub distances: Vec<Option<f64>>,
}

impl OverlapTrace {
    pub fn len(&self) -> usize {
        self.overlaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overlaps.is_empty()
    }

    pub fn push(&mut self, pred: &BoundingBox, gt: Option<&BoundingBox>) {
        self.overlaps.push(gt.map(|g| iou(pred, g)));
        self.distances
            .push(gt.map(|g| norm_center_distance(pred, g)));
    }

    /// Builds the trace for `predictions[i]` against the ground truth of
    /// frame `frames[i]`.
    pub fn build(predictions: &[BoundingBox], seq: &Sequence, frames: &[usize]) -> Result<Self> {
        if predictions.len() != frames.len() {
            return Err(Error::Protocol(format!(
                "{} predictions for {} frames of `{}`",
                predictions.len(),
                frames.len(),
                seq.name()
            )));
        }
        let mut trace = OverlapTrace::default();
        for (pred, &f) in predictions.iter().zip(frames) {
            if f >= seq.len() {
                return Err(Error::Protocol(format!(
                    "frame {f} outside `{}` ({} frames)",
                    seq.name(),
                    seq.len()
                )));
            }
            trace.push(pred, seq.gt(f).as_ref());
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0.0, 0.0, 10.0, 10.0), &b(0.0, 0.0, 10.0, 10.0)), 1.0);
        assert_eq!(iou(&b(0.0, 0.0, 10.0, 10.0), &b(20.0, 20.0, 5.0, 5.0)), 0.0);
        // intersection 1, union 4 + 4 - 1 = 7
        let v = iou(&b(0.0, 0.0, 2.0, 2.0), &b(1.0, 1.0, 2.0, 2.0));
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
        // touching edges do not overlap
        assert_eq!(iou(&b(0.0, 0.0, 2.0, 2.0), &b(2.0, 0.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn center_distance_examples() {
        let gt = b(10.0, 20.0, 4.0, 8.0);
        assert_eq!(norm_center_distance(&gt, &gt), 0.0);
        assert_eq!(
            norm_center_distance(&gt.translated(4.0, 0.0).unwrap(), &gt),
            1.0
        );
        assert_eq!(
            norm_center_distance(&gt.translated(12.0, 32.0).unwrap(), &gt),
            5.0
        );
    }

    #[test]
    fn trace_marks_absent_ground_truth() {
        let boxes = vec![
            Some(b(0.0, 0.0, 4.0, 4.0)),
            None,
            Some(b(1.0, 0.0, 4.0, 4.0)),
        ];
        let seq = Sequence::builder("s", boxes).build().unwrap();
        let p = b(0.0, 0.0, 4.0, 4.0);
        let t = OverlapTrace::build(&[p, p, p], &seq, &[0, 1, 2]).unwrap();
        assert_eq!(t.overlaps[0], Some(1.0));
        assert_eq!(t.overlaps[1], None);
        assert_eq!(t.distances[1], None);
        assert_eq!(t.distances[2], Some(0.25));
        assert!(OverlapTrace::build(&[p], &seq, &[0, 1]).is_err());
        assert!(OverlapTrace::build(&[p], &seq, &[3]).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-50i32..50, -50i32..50, 1i32..60, 1i32..60)
            .prop_map(|(x, y, w, h)| b(x as f64, y as f64, w as f64, h as f64))
    }

    proptest! {
        #[test]
        fn iou_properties(a in arb_box(), c in arb_box(), dx in -100i32..100, dy in -100i32..100, k in 1u32..16) {
            let v = iou(&a, &c);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert_eq!(iou(&a, &a), 1.0);
            let disjoint = a.right() <= c.x() || c.right() <= a.x()
                || a.bottom() <= c.y() || c.bottom() <= a.y();
            prop_assert_eq!(v == 0.0, disjoint);
            let (dx, dy) = (dx as f64, dy as f64);
            prop_assert_eq!(v, iou(&a.translated(dx, dy).unwrap(), &c.translated(dx, dy).unwrap()));
            let k = k as f64;
            prop_assert_eq!(v, iou(&a.scaled(k).unwrap(), &c.scaled(k).unwrap()));
        }
    }
}
