//! Grayscale images and the pluggable sources that resolve a frame index to one.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Protocol(format!(
                "image buffer of {} values does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[f32] {
        &self.data
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .into_luma8();
        let (w, h) = img.dimensions();
        let data = img
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect();
        Self::from_vec(w as usize, h as usize, data)
    }

    /// Writes an 8-bit grayscale PNG; intensities are clamped and rounded.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions");
        buf.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Resolves frame indices of one sequence to images.
pub trait FrameSource: Send + Sync + fmt::Debug {
    fn image(&self, index: usize) -> Result<Arc<Image>>;

    /// On-disk location of the frame, when the source is file backed.
    fn path(&self, _index: usize) -> Option<PathBuf> {
        None
    }
}

/// Source for sequences loaded without imagery.
#[derive(Debug, Default)]
pub struct NoFrames;

impl FrameSource for NoFrames {
    fn image(&self, index: usize) -> Result<Arc<Image>> {
        Err(Error::Protocol(format!(
            "frame {index} requested but the sequence has no frame source"
        )))
    }
}

/// Frames stored as `<dir>/<index:08>.png`.
#[derive(Debug, Clone)]
pub struct PngDirectory {
    dir: PathBuf,
}

impl PngDirectory {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn file_name(index: usize) -> String {
        format!("{index:08}.png")
    }
}

impl FrameSource for PngDirectory {
    fn image(&self, index: usize) -> Result<Arc<Image>> {
        Image::load_png(&self.dir.join(Self::file_name(index))).map(Arc::new)
    }

    fn path(&self, index: usize) -> Option<PathBuf> {
        Some(self.dir.join(Self::file_name(index)))
    }
}

/// Frames held fully in memory.
#[derive(Debug, Clone)]
pub struct InMemoryFrames(pub Vec<Arc<Image>>);

impl FrameSource for InMemoryFrames {
    fn image(&self, index: usize) -> Result<Arc<Image>> {
        self.0
            .get(index)
            .cloned()
            .ok_or_else(|| Error::Protocol(format!("frame {index} out of range")))
    }
}
