//! Sequence attributes and the rules that derive the automatic ones from boxes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Sequence;
use crate::error::Error;

/// Area ratio and aspect-ratio-change bounds; values outside fire SC / ARC.
pub const CHANGE_RATIO_RANGE: (f64, f64) = (0.5, 2.0);
/// Boxes smaller than this area (px²) fire LR.
pub const LOW_RESOLUTION_AREA: f64 = 1000.0;
/// Boxes larger than this area (px²) fire HR.
pub const HIGH_RESOLUTION_AREA: f64 = 250_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    /// Scale change.
    #[serde(rename = "SC")]
    ScaleChange,
    /// Aspect ratio change.
    #[serde(rename = "ARC")]
    AspectRatioChange,
    /// Illumination variation.
    #[serde(rename = "IV")]
    IlluminationVariation,
    /// Similar objects.
    #[serde(rename = "SOB")]
    SimilarObjects,
    /// Rigid object.
    #[serde(rename = "RIG")]
    Rigid,
    /// Deformable object.
    #[serde(rename = "DEF")]
    Deformable,
    /// Rotation.
    #[serde(rename = "ROT")]
    Rotation,
    /// Partial occlusion.
    #[serde(rename = "POC")]
    PartialOcclusion,
    /// Full occlusion.
    #[serde(rename = "FOC")]
    FullOcclusion,
    /// Out of view.
    #[serde(rename = "OUT")]
    OutOfView,
    /// Motion blur.
    #[serde(rename = "MB")]
    MotionBlur,
    /// Fast motion.
    #[serde(rename = "FM")]
    FastMotion,
    /// Low resolution.
    #[serde(rename = "LR")]
    LowResolution,
    /// High resolution.
    #[serde(rename = "HR")]
    HighResolution,
    /// Head motion.
    #[serde(rename = "HM")]
    HeadMotion,
    /// One hand.
    #[serde(rename = "1H")]
    OneHand,
    /// Two hands.
    #[serde(rename = "2H")]
    TwoHands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    Automatic,
    Manual,
}

impl Attribute {
    pub const ALL: [Attribute; 17] = [
        Attribute::ScaleChange,
        Attribute::AspectRatioChange,
        Attribute::IlluminationVariation,
        Attribute::SimilarObjects,
        Attribute::Rigid,
        Attribute::Deformable,
        Attribute::Rotation,
        Attribute::PartialOcclusion,
        Attribute::FullOcclusion,
        Attribute::OutOfView,
        Attribute::MotionBlur,
        Attribute::FastMotion,
        Attribute::LowResolution,
        Attribute::HighResolution,
        Attribute::HeadMotion,
        Attribute::OneHand,
        Attribute::TwoHands,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Attribute::ScaleChange => "SC",
            Attribute::AspectRatioChange => "ARC",
            Attribute::IlluminationVariation => "IV",
            Attribute::SimilarObjects => "SOB",
            Attribute::Rigid => "RIG",
            Attribute::Deformable => "DEF",
            Attribute::Rotation => "ROT",
            Attribute::PartialOcclusion => "POC",
            Attribute::FullOcclusion => "FOC",
            Attribute::OutOfView => "OUT",
            Attribute::MotionBlur => "MB",
            Attribute::FastMotion => "FM",
            Attribute::LowResolution => "LR",
            Attribute::HighResolution => "HR",
            Attribute::HeadMotion => "HM",
            Attribute::OneHand => "1H",
            Attribute::TwoHands => "2H",
        }
    }

    /// Whether the attribute can be derived from annotations.
    ///
    /// OUT is geometrically indistinguishable from FOC (both leave the frame
    /// unannotated), so only FOC is derived and OUT stays manual.
    pub fn labeling(self) -> Labeling {
        match self {
            Attribute::ScaleChange
            | Attribute::AspectRatioChange
            | Attribute::LowResolution
            | Attribute::HighResolution
            | Attribute::FastMotion
            | Attribute::FullOcclusion => Labeling::Automatic,
            _ => Labeling::Manual,
        }
    }

    pub fn is_automatic(self) -> bool {
        self.labeling() == Labeling::Automatic
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.code() == s)
            .ok_or_else(|| Error::UnknownAttribute(s.to_string()))
    }
}

fn outside_change_range(ratio: f64) -> bool {
    ratio < CHANGE_RATIO_RANGE.0 || ratio > CHANGE_RATIO_RANGE.1
}

/// The FM rule for one pair of consecutive annotated frames: the center moves
/// by more than the side-length scale `sqrt(area)` of the earlier box.
pub fn is_fast_motion(earlier: &super::BoundingBox, later: &super::BoundingBox) -> bool {
    center_displacement(earlier, later) > earlier.area().sqrt()
}

pub(crate) fn center_displacement(a: &super::BoundingBox, b: &super::BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (bx - ax).hypot(by - ay)
}

/// Evaluates every automatic attribute rule over the sequence's boxes.
pub fn auto_attributes(seq: &Sequence) -> BTreeSet<Attribute> {
    let mut out = BTreeSet::new();
    let boxes = seq.boxes();
    let Some(first) = boxes.first().copied().flatten() else {
        return out;
    };

    for b in boxes.iter().flatten() {
        if outside_change_range(first.area() / b.area()) {
            out.insert(Attribute::ScaleChange);
        }
        if outside_change_range(first.aspect_ratio() / b.aspect_ratio()) {
            out.insert(Attribute::AspectRatioChange);
        }
        if b.area() < LOW_RESOLUTION_AREA {
            out.insert(Attribute::LowResolution);
        }
        if b.area() > HIGH_RESOLUTION_AREA {
            out.insert(Attribute::HighResolution);
        }
    }

    if boxes.iter().any(Option::is_none) {
        out.insert(Attribute::FullOcclusion);
    }

    let fast = boxes.windows(2).any(|pair| match (pair[0], pair[1]) {
        (Some(a), Some(b)) => is_fast_motion(&a, &b),
        _ => false,
    });
    if fast {
        out.insert(Attribute::FastMotion);
    }
    out
}
