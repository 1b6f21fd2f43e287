//! Dataset directory layout:
//!
//! ```text
//! <root>/<sequence>/groundtruth.txt   one box record per frame
//! <root>/<sequence>/meta.toml         name, fps, width, height, attributes, verb, noun
//! <root>/<sequence>/frames/00000000.png   optional imagery
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{parse_boxes, serialize_boxes, Attribute, FrameSource, PngDirectory, Sequence};
use crate::error::{Error, Result};

pub const ANNOTATION_FILE: &str = "groundtruth.txt";
pub const METADATA_FILE: &str = "meta.toml";
pub const FRAMES_DIR: &str = "frames";

/// Sidecar metadata for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceMeta {
    pub name: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    /// Frame count; checked against the annotation file when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub verb: String,
    #[serde(default)]
    pub noun: String,
}

impl SequenceMeta {
    pub fn from_sequence(seq: &Sequence) -> Self {
        Self {
            name: seq.name().to_string(),
            fps: seq.fps(),
            width: seq.frame_width(),
            height: seq.frame_height(),
            length: Some(seq.len()),
            attributes: seq
                .attributes()
                .iter()
                .map(|a| a.code().to_string())
                .collect(),
            verb: seq.verb().to_string(),
            noun: seq.noun().to_string(),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Loads a sequence from its annotation file and metadata sidecar. Frames are
/// resolved from a `frames/` directory next to the annotation file if one exists.
pub fn load_sequence(annotation_path: &Path, metadata_path: &Path) -> Result<Sequence> {
    let meta_text = read_to_string(metadata_path)?;
    let meta: SequenceMeta = toml::from_str(&meta_text).map_err(|e| Error::Metadata {
        path: metadata_path.to_path_buf(),
        message: e.message().to_string(),
    })?;

    let boxes = parse_boxes(&read_to_string(annotation_path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", annotation_path.display()),
        },
        other => other,
    })?;

    if let Some(expected) = meta.length {
        if expected != boxes.len() {
            return Err(Error::sequence(
                &meta.name,
                format!(
                    "metadata declares {expected} frames but {} has {}",
                    annotation_path.display(),
                    boxes.len()
                ),
            ));
        }
    }

    let attributes = meta
        .attributes
        .iter()
        .map(|a| a.parse::<Attribute>())
        .collect::<Result<Vec<_>>>()?;

    let mut builder = Sequence::builder(meta.name, boxes)
        .fps(meta.fps)
        .frame_size(meta.width, meta.height)
        .attributes(attributes)
        .verb(meta.verb)
        .noun(meta.noun);

    let frames_dir = annotation_path
        .parent()
        .map(|p| p.join(FRAMES_DIR))
        .filter(|p| p.is_dir());
    if let Some(dir) = frames_dir {
        builder = builder.frames(Arc::new(PngDirectory::new(dir)) as Arc<dyn FrameSource>);
    }
    builder.build()
}

/// Writes `groundtruth.txt`, `meta.toml` and, when `write_frames` is set,
/// every frame as PNG under `<dir>/<name>/`.
pub fn save_sequence(root: &Path, seq: &Sequence, write_frames: bool) -> Result<PathBuf> {
    let dir = root.join(seq.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let ann = dir.join(ANNOTATION_FILE);
    fs::write(&ann, serialize_boxes(seq.boxes()))
        .map_err(|e| Error::io(format!("writing {}", ann.display()), e))?;
    write_meta(&dir.join(METADATA_FILE), &SequenceMeta::from_sequence(seq))?;

    if write_frames {
        let frames = dir.join(FRAMES_DIR);
        fs::create_dir_all(&frames)
            .map_err(|e| Error::io(format!("creating {}", frames.display()), e))?;
        (0..seq.len()).into_par_iter().try_for_each(|i| {
            let img = seq.frames().image(i)?;
            img.save_png(&frames.join(PngDirectory::file_name(i)))
        })?;
    }
    Ok(dir)
}

/// Rewrites only the metadata sidecar of `seq` under `root`.
pub fn save_metadata(root: &Path, seq: &Sequence) -> Result<()> {
    write_meta(
        &root.join(seq.name()).join(METADATA_FILE),
        &SequenceMeta::from_sequence(seq),
    )
}

pub(crate) fn write_meta(path: &Path, meta: &SequenceMeta) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| Error::Metadata {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// A set of sequences loaded from one root directory, sorted by name.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub sequences: Vec<Sequence>,
}

impl Dataset {
    pub fn sequence(&self, name: &str) -> Option<&Sequence> {
        self.sequences.iter().find(|s| s.name() == name)
    }

    pub fn total_frames(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }

    pub fn annotated_frames(&self) -> usize {
        self.sequences.iter().map(Sequence::annotated_frames).sum()
    }

    /// Paths of the sequence directories, in dataset order.
    pub fn sequence_dirs(&self) -> Vec<PathBuf> {
        self.sequences
            .iter()
            .map(|s| self.root.join(s.name()))
            .collect()
    }
}

fn sequence_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries =
        fs::read_dir(root).map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
        let path = entry.path();
        if path.join(ANNOTATION_FILE).is_file() && path.join(METADATA_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads every sequence directory under `root` in parallel.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let dirs = sequence_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::Protocol(format!(
            "no sequences found under {}",
            root.display()
        )));
    }
    let mut sequences = dirs
        .par_iter()
        .map(|d| load_sequence(&d.join(ANNOTATION_FILE), &d.join(METADATA_FILE)))
        .collect::<Result<Vec<_>>>()?;
    sequences.sort_by(|a, b| a.name().cmp(b.name()));
    Ok(Dataset {
        root: root.to_path_buf(),
        sequences,
    })
}

/// SHA-256 over every annotation file, in sequence-name order, hex encoded.
pub fn dataset_digest(root: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for dir in sequence_dirs(root)? {
        let name = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let path = dir.join(ANNOTATION_FILE);
        let bytes =
            fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
