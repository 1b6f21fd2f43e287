//! Synthetic sequences with exactly known ground truth: a flat rectangle
//! moving over a flat background by a piecewise-constant velocity script.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{save_sequence, Attribute, BoundingBox, FrameSource, Image, Sequence};
use crate::error::{Error, Result};

pub const DEFAULT_BACKGROUND: f32 = 0.2;
pub const DEFAULT_FOREGROUND: f32 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Displacement `(vx, vy)` px/frame applied when stepping into each frame of
/// `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub start: usize,
    pub end: usize,
    pub vx: f64,
    pub vy: f64,
}

/// Inclusive frame range in which the target is hidden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpan {
    pub start: usize,
    pub end: usize,
}

fn default_background() -> f32 {
    DEFAULT_BACKGROUND
}

fn default_foreground() -> f32 {
    DEFAULT_FOREGROUND
}

fn default_fps() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub length: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub target: TargetRect,
    #[serde(default)]
    pub motion: Vec<MotionSegment>,
    #[serde(default)]
    pub absent: Vec<FrameSpan>,
    /// Standard deviation of additive per-pixel Gaussian noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_background")]
    pub background: f32,
    #[serde(default = "default_foreground")]
    pub foreground: f32,
    #[serde(default)]
    pub verb: String,
    #[serde(default)]
    pub noun: String,
    /// Manual attribute labels; automatic ones are computed on generation.
    #[serde(default)]
    pub attributes: Vec<String>,
}

/// A TOML document holding `[[sequences]]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDataset {
    pub sequences: Vec<SynthSpec>,
}

impl SynthDataset {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Synth(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synthetic specs always serialize")
    }
}

impl SynthSpec {
    fn is_absent(&self, frame: usize) -> bool {
        self.absent
            .iter()
            .any(|s| (s.start..=s.end).contains(&frame))
    }

    fn velocity(&self, frame: usize) -> (f64, f64) {
        self.motion
            .iter()
            .find(|m| (m.start..=m.end).contains(&frame))
            .map_or((0.0, 0.0), |m| (m.vx, m.vy))
    }

    /// Target box of every frame, hidden frames included.
    pub fn trajectory(&self) -> Result<Vec<BoundingBox>> {
        let t = self.target;
        let mut out = Vec::with_capacity(self.length);
        let (mut x, mut y) = (t.x, t.y);
        for frame in 0..self.length {
            if frame > 0 {
                let (vx, vy) = self.velocity(frame);
                x += vx;
                y += vy;
            }
            out.push(BoundingBox::new(x, y, t.w, t.h).map_err(|e| Error::Synth(e.to_string()))?);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<Vec<BoundingBox>> {
        let err = |m: String| Err(Error::Synth(format!("`{}`: {m}", self.name)));
        if self.length < 2 {
            return err(format!("length {} < 2", self.length));
        }
        if self.width == 0 || self.height == 0 {
            return err("frame size must be positive".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return err(format!("invalid fps {}", self.fps));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return err(format!("invalid noise level {}", self.noise));
        }
        if self.is_absent(0) {
            return err("the target must be visible in frame 0".into());
        }
        for m in &self.motion {
            if m.start == 0 || m.start > m.end || !(m.vx.is_finite() && m.vy.is_finite()) {
                return err(format!("invalid motion segment {m:?}"));
            }
        }
        for a in &self.absent {
            if a.start > a.end || a.end >= self.length {
                return err(format!("invalid absent span {a:?}"));
            }
        }
        let boxes = self.trajectory()?;
        let (fw, fh) = (self.width as f64, self.height as f64);
        for (i, b) in boxes.iter().enumerate() {
            let inside = b.x() >= 0.0 && b.y() >= 0.0 && b.right() <= fw && b.bottom() <= fh;
            if !inside && !self.is_absent(i) {
                return err(format!(
                    "target {b} leaves the {fw}x{fh} frame at frame {i} without a visibility gap"
                ));
            }
        }
        Ok(boxes)
    }
}

/// Renders frames on demand from the spec.
#[derive(Debug)]
pub struct SynthFrames {
    spec: SynthSpec,
    boxes: Vec<BoundingBox>,
}

impl SynthFrames {
    pub fn render(&self, index: usize) -> Result<Image> {
        let spec = &self.spec;
        if index >= spec.length {
            return Err(Error::Protocol(format!("frame {index} out of range")));
        }
        let (w, h) = (spec.width as usize, spec.height as usize);
        let mut img = Image::filled(w, h, spec.background);
        if !spec.is_absent(index) {
            let b = &self.boxes[index];
            // pixels whose centers fall inside the box
            let x0 = (b.x() - 0.5).ceil().max(0.0) as usize;
            let y0 = (b.y() - 0.5).ceil().max(0.0) as usize;
            let x1 = ((b.right() - 0.5).ceil().max(0.0) as usize).min(w);
            let y1 = ((b.bottom() - 0.5).ceil().max(0.0) as usize).min(h);
            for y in y0..y1 {
                for x in x0..x1 {
                    img.set(x, y, spec.foreground);
                }
            }
        }
        if spec.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(index as u64);
            let normal = Normal::new(0.0, spec.noise).map_err(|e| Error::Synth(e.to_string()))?;
            for y in 0..h {
                for x in 0..w {
                    let v = img.get(x, y) as f64 + normal.sample(&mut rng);
                    img.set(x, y, v.clamp(0.0, 1.0) as f32);
                }
            }
        }
        Ok(img)
    }
}

impl FrameSource for SynthFrames {
    fn image(&self, index: usize) -> Result<Arc<Image>> {
        self.render(index).map(Arc::new)
    }
}

/// Builds the sequence: ground truth from the motion script, automatic
/// attributes computed, frames rendered lazily.
pub fn generate(spec: &SynthSpec) -> Result<Sequence> {
    let boxes = spec.validate()?;
    let gt = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (!spec.is_absent(i)).then_some(*b))
        .collect();
    let manual = spec
        .attributes
        .iter()
        .map(|a| a.parse::<Attribute>())
        .collect::<Result<Vec<_>>>()?;
    let frames = Arc::new(SynthFrames {
        spec: spec.clone(),
        boxes,
    });
    Ok(Sequence::builder(spec.name.clone(), gt)
        .fps(spec.fps)
        .frame_size(spec.width, spec.height)
        .attributes(manual)
        .verb(spec.verb.clone())
        .noun(spec.noun.clone())
        .frames(frames)
        .build()?
        .with_auto_attributes())
}

/// Generates every sequence and writes it, frames as PNG, under `out`.
pub fn materialize(dataset: &SynthDataset, out: &Path) -> Result<Vec<Sequence>> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    dataset
        .sequences
        .iter()
        .map(|spec| {
            let seq = generate(spec)?;
            save_sequence(out, &seq, true)?;
            Ok(seq)
        })
        .collect()
}

const VERBS: [&str; 5] = ["take", "put", "open", "cut", "wash"];
const NOUNS: [&str; 6] = ["cup", "knife", "plate", "pan", "sponge", "jar"];
const MANUAL: [&str; 5] = ["RIG", "DEF", "1H", "2H", "HM"];

/// A reproducible set of `count` random specs: 160x120 frames, targets of
/// 10..=16 px moving at most 2 px/frame per axis and kept clear of the
/// borders, optional visibility gaps, random verb/noun/manual labels.
pub fn demo_dataset(count: usize, seed: u64) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (width, height) = (160u32, 120u32);
    let margin = 6.0;
    let sequences = (0..count)
        .map(|i| {
            let length = rng.random_range(120..=300usize);
            let (w, h) = (
                rng.random_range(10..=16) as f64,
                rng.random_range(10..=16) as f64,
            );
            let (x_max, y_max) = (width as f64 - w - margin, height as f64 - h - margin);
            let mut pos = (
                rng.random_range(margin as i64..=x_max as i64) as f64,
                rng.random_range(margin as i64..=y_max as i64) as f64,
            );
            let target = TargetRect {
                x: pos.0,
                y: pos.1,
                w,
                h,
            };

            let mut motion = Vec::new();
            let mut start = 1;
            while start < length {
                let want = rng.random_range(15..=60usize).min(length - start);
                let (vx, vy) = (
                    rng.random_range(-2..=2) as f64,
                    rng.random_range(-2..=2) as f64,
                );
                let steps_x = steps_within(pos.0, vx, margin, x_max);
                let steps_y = steps_within(pos.1, vy, margin, y_max);
                let n = want.min(steps_x).min(steps_y);
                if n == 0 {
                    start += want;
                    continue;
                }
                motion.push(MotionSegment {
                    start,
                    end: start + n - 1,
                    vx,
                    vy,
                });
                pos = (pos.0 + vx * n as f64, pos.1 + vy * n as f64);
                start += n;
            }

            let mut absent = Vec::new();
            if rng.random_bool(0.3) {
                let s = rng.random_range(10..length - 10);
                let e = (s + rng.random_range(4..=20)).min(length - 1);
                absent.push(FrameSpan { start: s, end: e });
            }
            let attributes = MANUAL
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .map(|s| s.to_string())
                .collect();
            SynthSpec {
                name: format!("synth-{i:03}"),
                width,
                height,
                length,
                fps: 60.0,
                target,
                motion,
                absent,
                noise: 0.0,
                seed: seed.wrapping_add(i as u64),
                background: DEFAULT_BACKGROUND,
                foreground: DEFAULT_FOREGROUND,
                verb: VERBS[rng.random_range(0..VERBS.len())].to_string(),
                noun: NOUNS[rng.random_range(0..NOUNS.len())].to_string(),
                attributes,
            }
        })
        .collect();
    SynthDataset { sequences }
}

/// How many steps of `v` keep `p` within `[lo, hi]`.
fn steps_within(p: f64, v: f64, lo: f64, hi: f64) -> usize {
    if v > 0.0 {
        ((hi - p) / v).floor().max(0.0) as usize
    } else if v < 0.0 {
        ((lo - p) / v).floor().max(0.0) as usize
    } else {
        usize::MAX
    }
}
