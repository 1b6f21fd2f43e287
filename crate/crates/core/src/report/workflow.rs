use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{Entry, ResultsDocument};
use crate::dataset::{dataset_digest, load_dataset, Sequence};
use crate::error::{Error, Result};
use crate::protocols::{
    interaction_track_score, interaction_tracks, parse_detections, run_dir, run_protocol, run_stem,
    Protocol, RteClock, TrackScores, TrackerRun,
};
use crate::tracker::{RegistryOptions, Tracker, TrackerSpec};

#[derive(Debug, Clone)]
pub struct EvaluateConfig {
    pub tracker: TrackerSpec,
    pub protocol: Protocol,
    pub clock: RteClock,
    /// Sequences evaluated concurrently. Forced to 1 for measured RTE.
    pub jobs: usize,
    pub registry: RegistryOptions,
    /// Run-directory name; derived from the tracker name when unset.
    pub label: Option<String>,
}

impl EvaluateConfig {
    pub fn new(tracker: TrackerSpec, protocol: Protocol) -> Self {
        Self {
            tracker,
            protocol,
            clock: RteClock::Measured,
            jobs: 1,
            registry: RegistryOptions::default(),
            label: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.tracker.label())
    }

    fn effective_jobs(&self) -> usize {
        if self.protocol == Protocol::Rte && self.clock == RteClock::Measured {
            1
        } else {
            self.jobs.max(1)
        }
    }
}

fn build_tracker(
    config: &EvaluateConfig,
    seq: &Sequence,
    log_dir: &Path,
    stem: String,
) -> Result<Box<dyn Tracker>> {
    let mut options = config.registry.clone();
    if config.tracker.is_external() && options.bridge.stderr_log.is_none() {
        options.bridge.stderr_log = Some(log_dir.join(format!("{stem}.stderr.log")));
    }
    config.tracker.build(seq, &options)
}

fn run_sequence(config: &EvaluateConfig, seq: &Sequence, dir: &Path) -> Result<Vec<TrackerRun>> {
    let log_dir = dir.join("logs");
    let runs = run_protocol(config.protocol, seq, &config.clock, |anchor| {
        build_tracker(
            config,
            seq,
            &log_dir,
            run_stem(seq.name(), anchor.map(|a| a.frame)),
        )
    })?;
    for r in &runs {
        r.save(dir)?;
    }
    log::info!(
        "{}: {} run(s) on `{}`",
        config.label(),
        runs.len(),
        seq.name()
    );
    Ok(runs)
}

/// Runs the configured tracker over the dataset at `dataset_root`, stores
/// the runs under `out/<label>/<protocol>/` (replacing earlier ones) and
/// merges the scores into `out/results.json`.
pub fn evaluate(dataset_root: &Path, config: &EvaluateConfig, out: &Path) -> Result<Entry> {
    let root = std::path::absolute(dataset_root)
        .map_err(|e| Error::io(format!("resolving {}", dataset_root.display()), e))?;
    let dataset = load_dataset(&root)?;
    let digest = dataset_digest(&root)?;
    let label = config.label();
    let dir = run_dir(out, &label, config.protocol);
    if dir.exists() {
        fs::remove_dir_all(&dir)
            .map_err(|e| Error::io(format!("clearing {}", dir.display()), e))?;
    }
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_jobs())
        .build()
        .map_err(|e| Error::Protocol(format!("cannot start worker pool: {e}")))?;
    let runs: BTreeMap<String, Vec<TrackerRun>> = pool.install(|| {
        dataset
            .sequences
            .par_iter()
            .map(|seq| Ok((seq.name().to_string(), run_sequence(config, seq, &dir)?)))
            .collect::<Result<_>>()
    })?;

    let latency_ms = match &config.clock {
        RteClock::Constant(s) if config.protocol == Protocol::Rte => Some(s * 1000.0),
        _ => None,
    };
    let entry = Entry::compute(
        &config.tracker.to_string(),
        config.protocol,
        latency_ms,
        &dataset,
        &runs,
    )?;

    let mut doc = match ResultsDocument::load(out) {
        Ok(doc) if doc.digest == digest && doc.dataset == root => doc,
        Ok(_) => {
            log::warn!(
                "discarding results for a different dataset in {}",
                out.display()
            );
            ResultsDocument::new(root.clone(), digest.clone())
        }
        Err(_) => ResultsDocument::new(root.clone(), digest.clone()),
    };
    doc.version = env!("CARGO_PKG_VERSION").to_string();
    doc.entries
        .entry(label)
        .or_default()
        .insert(config.protocol, entry.clone());
    doc.save(out)?;
    Ok(entry)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracksReport {
    pub sequences: BTreeMap<String, TrackScores>,
    /// Mean over every scored track of every sequence.
    pub overall: f64,
    pub tracks: usize,
}

/// Interaction-track score of a tracker over the sequences named in a
/// detections file.
pub fn evaluate_tracks(
    dataset_root: &Path,
    detections_path: &Path,
    tracker: &TrackerSpec,
    registry: &RegistryOptions,
) -> Result<TracksReport> {
    let dataset = load_dataset(dataset_root)?;
    let text = fs::read_to_string(detections_path)
        .map_err(|e| Error::io(format!("reading {}", detections_path.display()), e))?;
    let detections = parse_detections(&text)?;
    if detections.is_empty() {
        return Err(Error::Undefined(format!(
            "no detections in {}",
            detections_path.display()
        )));
    }
    let mut sequences = BTreeMap::new();
    for (name, dets) in &detections {
        let seq = dataset
            .sequence(name)
            .ok_or_else(|| Error::Protocol(format!("detections name unknown sequence `{name}`")))?;
        let tracks = interaction_tracks(dets, seq)?;
        let scores = interaction_track_score(seq, &tracks, |_| tracker.build(seq, registry))?;
        sequences.insert(name.clone(), scores);
    }
    let all: Vec<f64> = sequences
        .values()
        .flat_map(|s| s.per_track.iter().copied())
        .collect();
    Ok(TracksReport {
        overall: all.iter().sum::<f64>() / all.len() as f64,
        tracks: all.len(),
        sequences,
    })
}
