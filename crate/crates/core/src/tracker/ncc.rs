//! Normalized cross-correlation template matching: the reference tracker and
//! the template-based verifier / re-detector used by the `ltmu-mock` tracker.

use super::longterm::{Candidate, ReDetector, Verifier};
use super::{not_initialized, Frame, Tracker};
use crate::dataset::{BoundingBox, Image};
use crate::error::{Error, Result};
use crate::metrics::iou;

/// Templates with a zero-mean norm below this are treated as flat.
const FLAT_NORM: f64 = 1e-9;

/// A grayscale patch cut around a target box, stored zero-mean.
///
/// The patch extends past the box by a context margin (clipped to the
/// frame) so that a uniformly colored target still yields a template with
/// structure.
#[derive(Debug, Clone)]
pub struct GrayTemplate {
    width: usize,
    height: usize,
    values: Vec<f64>,
    norm: f64,
    /// Box origin relative to the template origin.
    offset: (i64, i64),
    box_size: (f64, f64),
}

impl GrayTemplate {
    pub fn context_margin(box_w: i64, box_h: i64) -> i64 {
        ((box_w.min(box_h) as f64 * 0.25).ceil() as i64).max(2)
    }

    pub fn extract(image: &Image, target: &BoundingBox) -> Result<Self> {
        let bx = target.x().round() as i64;
        let by = target.y().round() as i64;
        let bw = (target.w().round() as i64).max(1);
        let bh = (target.h().round() as i64).max(1);
        let margin = Self::context_margin(bw, bh);
        let (fw, fh) = (image.width() as i64, image.height() as i64);

        let x0 = (bx - margin).clamp(0, fw);
        let y0 = (by - margin).clamp(0, fh);
        let x1 = (bx + bw + margin).clamp(0, fw);
        let y1 = (by + bh + margin).clamp(0, fh);
        if x1 <= x0 || y1 <= y0 || bx + bw <= 0 || by + bh <= 0 || bx >= fw || by >= fh {
            return Err(Error::Protocol(format!(
                "template box {target} does not intersect the {fw}x{fh} frame"
            )));
        }
        let (width, height) = ((x1 - x0) as usize, (y1 - y0) as usize);
        let mut values = Vec::with_capacity(width * height);
        for y in y0..y1 {
            for x in x0..x1 {
                values.push(image.get(x as usize, y as usize) as f64);
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self {
            width,
            height,
            values,
            norm,
            offset: (bx - x0, by - y0),
            box_size: (bw as f64, bh as f64),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_flat(&self) -> bool {
        self.norm < FLAT_NORM
    }

    /// Template origin that places the template's box at `target`.
    pub fn origin_for(&self, target: &BoundingBox) -> (i64, i64) {
        (
            target.x().round() as i64 - self.offset.0,
            target.y().round() as i64 - self.offset.1,
        )
    }

    /// The target box implied by a template placed at `(u, v)`.
    pub fn box_at(&self, u: i64, v: i64) -> BoundingBox {
        BoundingBox::new(
            (u + self.offset.0) as f64,
            (v + self.offset.1) as f64,
            self.box_size.0,
            self.box_size.1,
        )
        .expect("template box size is positive")
    }

    fn fits(&self, image: &Image, u: i64, v: i64) -> bool {
        u >= 0
            && v >= 0
            && u as usize + self.width <= image.width()
            && v as usize + self.height <= image.height()
    }

    /// Zero-normalized cross-correlation with the patch at `(u, v)`, or
    /// `None` when the patch leaves the frame or is flat.
    pub fn correlation(&self, image: &Image, u: i64, v: i64) -> Option<f64> {
        if self.is_flat() || !self.fits(image, u, v) {
            return None;
        }
        let (u, v) = (u as usize, v as usize);
        let stride = image.width();
        let pixels = image.pixels();
        let patch =
            |row: usize| &pixels[(v + row) * stride + u..(v + row) * stride + u + self.width];
        let n = (self.width * self.height) as f64;
        let sum: f64 = (0..self.height)
            .map(|row| patch(row).iter().map(|&p| p as f64).sum::<f64>())
            .sum();
        let mean = sum / n;
        let (mut cross, mut var) = (0.0, 0.0);
        for row in 0..self.height {
            let t = &self.values[row * self.width..(row + 1) * self.width];
            for (tv, &p) in t.iter().zip(patch(row)) {
                let d = p as f64 - mean;
                cross += tv * d;
                var += d * d;
            }
        }
        let denom = self.norm * var.sqrt();
        (denom >= FLAT_NORM).then(|| cross / denom)
    }
}

/// Fixed-scale, integer-pixel NCC tracker.
///
/// Each update searches template placements within one template size of the
/// previous position and keeps the highest correlation; ties go to the
/// smallest `(y, x)`. A flat template makes it hold its last box.
#[derive(Debug, Clone, Default)]
pub struct NccTracker {
    template: Option<GrayTemplate>,
    last: Option<BoundingBox>,
}

impl NccTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn template(&self) -> Option<&GrayTemplate> {
        self.template.as_ref()
    }
}

impl Tracker for NccTracker {
    fn name(&self) -> &str {
        "ncc"
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.template = Some(GrayTemplate::extract(&*frame.image()?, &target)?);
        self.last = Some(target);
        Ok(())
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        let (Some(template), Some(last)) = (&self.template, self.last) else {
            return Err(not_initialized("ncc"));
        };
        if template.is_flat() {
            return Ok(last);
        }
        let image = frame.image()?;
        let (cu, cv) = template.origin_for(&last);
        let (tw, th) = (template.width() as i64, template.height() as i64);
        let u_max = image.width() as i64 - tw;
        let v_max = image.height() as i64 - th;

        let mut best: Option<(f64, i64, i64)> = None;
        for v in (cv - th).max(0)..=(cv + th).min(v_max) {
            for u in (cu - tw).max(0)..=(cu + tw).min(u_max) {
                if let Some(score) = template.correlation(&image, u, v) {
                    if best.is_none_or(|(b, _, _)| score > b) {
                        best = Some((score, u, v));
                    }
                }
            }
        }
        let out = best.map_or(last, |(_, u, v)| template.box_at(u, v));
        self.last = Some(out);
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Confidence = positive part of the NCC between the init template and the
/// patch under the queried box.
#[derive(Debug, Clone, Default)]
pub struct TemplateVerifier {
    template: Option<GrayTemplate>,
}

impl Verifier for TemplateVerifier {
    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.template = Some(GrayTemplate::extract(&*frame.image()?, &target)?);
        Ok(())
    }

    fn score(&mut self, frame: &Frame<'_>, candidate: &BoundingBox) -> Result<f64> {
        let template = self
            .template
            .as_ref()
            .ok_or_else(|| not_initialized("template-verifier"))?;
        let (u, v) = template.origin_for(candidate);
        Ok(template
            .correlation(&*frame.image()?, u, v)
            .map_or(0.0, |c| c.clamp(0.0, 1.0)))
    }
}

/// Global strided template scan with greedy non-maximum suppression.
#[derive(Debug, Clone)]
pub struct TemplateReDetector {
    template: Option<GrayTemplate>,
    max_detections: usize,
    nms_iou: f64,
}

impl Default for TemplateReDetector {
    fn default() -> Self {
        Self {
            template: None,
            max_detections: 32,
            nms_iou: 0.3,
        }
    }
}

impl ReDetector for TemplateReDetector {
    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.template = Some(GrayTemplate::extract(&*frame.image()?, &target)?);
        Ok(())
    }

    fn detect(&mut self, frame: &Frame<'_>) -> Result<Vec<Candidate>> {
        let template = self
            .template
            .as_ref()
            .ok_or_else(|| not_initialized("template-redetector"))?;
        let image = frame.image()?;
        let stride = (template.width().min(template.height()) / 4).max(1);
        let mut hits = Vec::new();
        if template.width() <= image.width() && template.height() <= image.height() {
            for v in (0..=image.height() - template.height()).step_by(stride) {
                for u in (0..=image.width() - template.width()).step_by(stride) {
                    if let Some(score) = template.correlation(&image, u as i64, v as i64) {
                        if score > 0.0 {
                            hits.push(Candidate {
                                bbox: template.box_at(u as i64, v as i64),
                                score,
                            });
                        }
                    }
                }
            }
        }
        hits.sort_by(|a, b| b.score.total_cmp(&a.score));
        let mut kept: Vec<Candidate> = Vec::new();
        for c in hits {
            if kept.len() == self.max_detections {
                break;
            }
            if kept.iter().all(|k| iou(&k.bbox, &c.bbox) <= self.nms_iou) {
                kept.push(c);
            }
        }
        Ok(kept)
    }
}
