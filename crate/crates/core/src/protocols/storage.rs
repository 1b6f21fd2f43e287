//! Run artifacts: `<root>/<tracker>/<protocol>/<sequence>[.anchor_<frame>]`
//! followed by `.pred.txt` (one box line per sequence frame, empty outside
//! the evaluated range), `.time.txt` (seconds per processed frame) and
//! `.mask.txt` (processed frame indices in processing order).

use std::fs;
use std::path::{Path, PathBuf};

use super::{Protocol, TrackerRun};
use crate::dataset::{parse_boxes, serialize_boxes, Sequence};
use crate::error::{Error, Result};

const PRED_SUFFIX: &str = ".pred.txt";
const TIME_SUFFIX: &str = ".time.txt";
const MASK_SUFFIX: &str = ".mask.txt";

pub fn run_dir(root: &Path, tracker: &str, protocol: Protocol) -> PathBuf {
    root.join(tracker).join(protocol.to_string())
}

pub fn run_stem(sequence: &str, anchor_frame: Option<usize>) -> String {
    match anchor_frame {
        Some(f) => format!("{sequence}.anchor_{f}"),
        None => sequence.to_string(),
    }
}

fn write(path: PathBuf, text: String) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn numbers<T: std::str::FromStr>(path: &Path) -> Result<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Metadata {
                path: path.to_path_buf(),
                message: format!("line {}: not a number: `{l}`", i + 1),
            })
        })
        .collect()
}

impl TrackerRun {
    /// Writes the three artifact files into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let stem = run_stem(&self.sequence, self.anchor().map(|a| a.frame));
        write(
            dir.join(stem.clone() + PRED_SUFFIX),
            serialize_boxes(&self.predictions_by_frame()),
        )?;
        let lines = |v: Vec<String>| v.into_iter().map(|s| s + "\n").collect::<String>();
        write(
            dir.join(stem.clone() + TIME_SUFFIX),
            lines(self.runtimes.iter().map(f64::to_string).collect()),
        )?;
        write(
            dir.join(stem + MASK_SUFFIX),
            lines(self.processed.iter().map(usize::to_string).collect()),
        )
    }

    /// Reads the run stored under `stem` in `dir` and checks it against `seq`.
    pub fn load(dir: &Path, stem: &str, seq: &Sequence, protocol: Protocol) -> Result<Self> {
        let pred_path = dir.join(format!("{stem}{PRED_SUFFIX}"));
        let by_frame = parse_boxes(&read(&pred_path)?).map_err(|e| Error::Metadata {
            path: pred_path.clone(),
            message: e.to_string(),
        })?;
        let stale = |m: String| Error::Stale(format!("{}: {m}", pred_path.display()));
        let n = seq.len();
        if by_frame.len() != n {
            return Err(stale(format!(
                "{} lines for a {n}-frame sequence",
                by_frame.len()
            )));
        }
        let processed: Vec<usize> = numbers(&dir.join(format!("{stem}{MASK_SUFFIX}")))?;
        let runtimes: Vec<f64> = numbers(&dir.join(format!("{stem}{TIME_SUFFIX}")))?;
        if processed.len() < 2 || processed.len() != runtimes.len() {
            return Err(stale(format!(
                "{} processed frames and {} runtimes",
                processed.len(),
                runtimes.len()
            )));
        }
        if processed.iter().any(|&f| f >= n) {
            return Err(stale("processed frame out of range".into()));
        }
        let start = processed[0];
        let frames: Vec<usize> = if processed[1] < start {
            (0..=start).rev().collect()
        } else {
            (start..n).collect()
        };
        let predictions = frames
            .iter()
            .map(|&f| by_frame[f].ok_or_else(|| stale(format!("missing prediction for frame {f}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrackerRun {
            protocol,
            sequence: seq.name().to_string(),
            length: n,
            frames,
            predictions,
            processed,
            runtimes,
        })
    }
}

/// All runs of `seq` stored in `dir`; MSE runs ordered by anchor frame.
pub fn load_runs(dir: &Path, seq: &Sequence, protocol: Protocol) -> Result<Vec<TrackerRun>> {
    if protocol != Protocol::Mse {
        return Ok(vec![TrackerRun::load(dir, seq.name(), seq, protocol)?]);
    }
    let prefix = format!("{}.anchor_", seq.name());
    let entries =
        fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut anchors = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(f) = name
            .strip_prefix(&prefix)
            .and_then(|r| r.strip_suffix(PRED_SUFFIX))
            .and_then(|f| f.parse::<usize>().ok())
        {
            anchors.push(f);
        }
    }
    if anchors.is_empty() {
        return Err(Error::Stale(format!(
            "no runs for `{}` in {}",
            seq.name(),
            dir.display()
        )));
    }
    anchors.sort_unstable();
    anchors
        .into_iter()
        .map(|f| TrackerRun::load(dir, &run_stem(seq.name(), Some(f)), seq, protocol))
        .collect()
}
