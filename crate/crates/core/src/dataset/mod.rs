//! Annotation data model, on-disk formats, automatic attributes and
//! dataset statistics.

mod annotation;
mod attributes;
mod bbox;
mod frames;
mod stats;
mod storage;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use annotation::{parse_box_line, parse_boxes, serialize_boxes};
pub use attributes::{
    auto_attributes, is_fast_motion, Attribute, Labeling, CHANGE_RATIO_RANGE, HIGH_RESOLUTION_AREA,
    LOW_RESOLUTION_AREA,
};
pub use bbox::{BoundingBox, MIN_EXTENT};
pub use frames::{FrameSource, Image, InMemoryFrames, NoFrames, PngDirectory};
pub use stats::{bbox_statistics, fm_motion_quantity, BoxStatistics, Histogram};
pub use storage::{
    dataset_digest, load_dataset, load_sequence, save_metadata, save_sequence, Dataset,
    SequenceMeta, ANNOTATION_FILE, FRAMES_DIR, METADATA_FILE,
};

use crate::error::{Error, Result};

/// One frame's ground truth; `bbox` is absent when the target is not visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAnnotation {
    pub index: usize,
    pub bbox: Option<BoundingBox>,
}

/// An annotated video sequence. Cheap to clone; frames are shared.
#[derive(Clone)]
pub struct Sequence {
    name: String,
    fps: f64,
    frame_width: u32,
    frame_height: u32,
    boxes: Vec<Option<BoundingBox>>,
    attributes: BTreeSet<Attribute>,
    verb: String,
    noun: String,
    frames: Arc<dyn FrameSource>,
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sequence")
            .field("name", &self.name)
            .field("len", &self.boxes.len())
            .field("fps", &self.fps)
            .field("frame_size", &(self.frame_width, self.frame_height))
            .field("attributes", &self.attributes)
            .field("verb", &self.verb)
            .field("noun", &self.noun)
            .finish_non_exhaustive()
    }
}

impl Sequence {
    pub fn builder(name: impl Into<String>, boxes: Vec<Option<BoundingBox>>) -> SequenceBuilder {
        SequenceBuilder {
            name: name.into(),
            fps: 60.0,
            frame_width: 1920,
            frame_height: 1080,
            boxes,
            attributes: BTreeSet::new(),
            verb: String::new(),
            noun: String::new(),
            frames: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frame_width(&self) -> u32 {
        self.frame_width
    }

    pub fn frame_height(&self) -> u32 {
        self.frame_height
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn boxes(&self) -> &[Option<BoundingBox>] {
        &self.boxes
    }

    pub fn gt(&self, index: usize) -> Option<BoundingBox> {
        self.boxes.get(index).copied().flatten()
    }

    pub fn annotations(&self) -> impl Iterator<Item = FrameAnnotation> + '_ {
        self.boxes
            .iter()
            .enumerate()
            .map(|(index, bbox)| FrameAnnotation { index, bbox: *bbox })
    }

    pub fn annotated_frames(&self) -> usize {
        self.boxes.iter().filter(|b| b.is_some()).count()
    }

    pub fn attributes(&self) -> &BTreeSet<Attribute> {
        &self.attributes
    }

    pub fn verb(&self) -> &str {
        &self.verb
    }

    pub fn noun(&self) -> &str {
        &self.noun
    }

    pub fn frames(&self) -> &Arc<dyn FrameSource> {
        &self.frames
    }

    /// Replaces the automatic attributes with freshly computed ones, keeping
    /// manual labels untouched.
    pub fn with_auto_attributes(mut self) -> Self {
        let auto = auto_attributes(&self);
        self.attributes.retain(|a| !a.is_automatic());
        self.attributes.extend(auto);
        self
    }

    /// Multiplies every box and the frame dimensions by `factor`.
    /// The frame source is kept as-is.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let boxes = self
            .boxes
            .iter()
            .map(|b| b.map(|b| b.scaled(factor)).transpose())
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.boxes = boxes;
        out.frame_width = (self.frame_width as f64 * factor).round() as u32;
        out.frame_height = (self.frame_height as f64 * factor).round() as u32;
        Ok(out)
    }
}

pub struct SequenceBuilder {
    name: String,
    fps: f64,
    frame_width: u32,
    frame_height: u32,
    boxes: Vec<Option<BoundingBox>>,
    attributes: BTreeSet<Attribute>,
    verb: String,
    noun: String,
    frames: Option<Arc<dyn FrameSource>>,
}

impl SequenceBuilder {
    pub fn fps(mut self, fps: f64) -> Self {
        self.fps = fps;
        self
    }

    pub fn frame_size(mut self, width: u32, height: u32) -> Self {
        self.frame_width = width;
        self.frame_height = height;
        self
    }

    pub fn attributes(mut self, attributes: impl IntoIterator<Item = Attribute>) -> Self {
        self.attributes = attributes.into_iter().collect();
        self
    }

    pub fn verb(mut self, verb: impl Into<String>) -> Self {
        self.verb = verb.into();
        self
    }

    pub fn noun(mut self, noun: impl Into<String>) -> Self {
        self.noun = noun.into();
        self
    }

    pub fn frames(mut self, frames: Arc<dyn FrameSource>) -> Self {
        self.frames = Some(frames);
        self
    }

    pub fn build(self) -> Result<Sequence> {
        if self.boxes.len() < 2 {
            return Err(Error::sequence(
                &self.name,
                format!("needs at least 2 frames, has {}", self.boxes.len()),
            ));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::sequence(
                &self.name,
                format!("invalid fps {}", self.fps),
            ));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::sequence(&self.name, "frame size must be positive"));
        }
        if self.boxes[0].is_none() {
            return Err(Error::sequence(
                &self.name,
                "first frame has no ground-truth box; the tracker cannot be initialized",
            ));
        }
        Ok(Sequence {
            name: self.name,
            fps: self.fps,
            frame_width: self.frame_width,
            frame_height: self.frame_height,
            boxes: self.boxes,
            attributes: self.attributes,
            verb: self.verb,
            noun: self.noun,
            frames: self.frames.unwrap_or_else(|| Arc::new(NoFrames)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64) -> Option<BoundingBox> {
        Some(BoundingBox::new(x, 0.0, 10.0, 10.0).unwrap())
    }

    #[test]
    fn builder_validates() {
        assert!(Sequence::builder("a", vec![b(0.0)]).build().is_err());
        assert!(Sequence::builder("a", vec![None, b(0.0)]).build().is_err());
        assert!(Sequence::builder("a", vec![b(0.0), b(1.0)])
            .fps(0.0)
            .build()
            .is_err());
        let s = Sequence::builder("a", vec![b(0.0), None]).build().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.annotated_frames(), 1);
        let ann: Vec<_> = s.annotations().collect();
        assert_eq!(
            ann[1],
            FrameAnnotation {
                index: 1,
                bbox: None
            }
        );
    }

    #[test]
    fn auto_attributes_keep_manual_labels() {
        let s = Sequence::builder("a", vec![b(0.0), None])
            .attributes([Attribute::Rigid, Attribute::ScaleChange])
            .build()
            .unwrap()
            .with_auto_attributes();
        assert_eq!(
            s.attributes(),
            &BTreeSet::from([
                Attribute::Rigid,
                Attribute::FullOcclusion,
                Attribute::LowResolution
            ])
        );
    }
}
