//! Results documents, the evaluate/report workflow and table rendering.
//!
//! `results.json` is a cache: every score in it can be recomputed from the
//! run files stored next to it, and [`recompute`] does exactly that.

mod render;
mod workflow;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use render::{
    breakdown_rows, format_score, ranking, write_report_files, BreakdownRow, RankingRow,
};
pub use workflow::{evaluate, evaluate_tracks, EvaluateConfig, TracksReport};

use crate::dataset::{dataset_digest, load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, breakdown_by_label, Aggregation, LabelKey, RunScores};
use crate::protocols::{load_runs, run_dir, sequence_scores, Protocol, TrackerRun};

pub const RESULTS_FILE: &str = "results.json";
pub const REPORT_DIR: &str = "report";

/// Scores of one tracker under one protocol over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Tracker name as given on the command line.
    pub tracker: String,
    pub protocol: Protocol,
    pub aggregation: Aggregation,
    /// Injected per-frame latency of RTE runs; measured when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rte_latency_ms: Option<f64>,
    pub overall: RunScores,
    pub sequences: BTreeMap<String, RunScores>,
    pub breakdowns: BTreeMap<LabelKey, BTreeMap<String, RunScores>>,
}

impl Entry {
    /// Scores runs grouped by sequence name; every dataset sequence must
    /// have runs.
    pub fn compute(
        tracker: &str,
        protocol: Protocol,
        rte_latency_ms: Option<f64>,
        dataset: &Dataset,
        runs: &BTreeMap<String, Vec<TrackerRun>>,
    ) -> Result<Self> {
        let mut sequences = BTreeMap::new();
        for seq in &dataset.sequences {
            let r = runs
                .get(seq.name())
                .ok_or_else(|| Error::Stale(format!("no runs for sequence `{}`", seq.name())))?;
            sequences.insert(seq.name().to_string(), sequence_scores(r, seq)?);
        }
        let pairs: Vec<_> = dataset
            .sequences
            .iter()
            .map(|s| (s, &sequences[s.name()]))
            .collect();
        let rule = protocol.aggregation();
        let mut overall = aggregate(&pairs, rule)?;
        let all = runs.values().flatten();
        let processed: usize = all.clone().map(|r| r.processed.len()).sum();
        let seconds: f64 = all.flat_map(|r| &r.runtimes).sum();
        overall.fps = (seconds > 0.0).then(|| processed as f64 / seconds);
        let breakdowns = LabelKey::ALL
            .iter()
            .map(|&k| Ok((k, breakdown_by_label(&pairs, k, rule)?)))
            .collect::<Result<_>>()?;
        Ok(Entry {
            tracker: tracker.to_string(),
            protocol,
            aggregation: rule,
            rte_latency_ms,
            overall,
            sequences,
            breakdowns,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub version: String,
    /// Absolute path of the evaluated dataset.
    pub dataset: PathBuf,
    pub digest: String,
    /// Run-directory label, then protocol.
    pub entries: BTreeMap<String, BTreeMap<Protocol, Entry>>,
}

impl ResultsDocument {
    pub fn new(dataset: PathBuf, digest: String) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            dataset,
            digest,
            entries: BTreeMap::new(),
        }
    }

    pub fn load(results_dir: &Path) -> Result<Self> {
        let path = results_dir.join(RESULTS_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Metadata {
            path,
            message: e.to_string(),
        })
    }

    pub fn save(&self, results_dir: &Path) -> Result<()> {
        let path = results_dir.join(RESULTS_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn protocols(&self) -> Vec<Protocol> {
        let mut p: Vec<_> = self
            .entries
            .values()
            .flat_map(|m| m.keys().copied())
            .collect();
        p.sort();
        p.dedup();
        p
    }
}

/// Rebuilds every entry of the document in `results_dir` from its run
/// files, after checking the dataset has not changed since evaluation.
pub fn recompute(results_dir: &Path) -> Result<ResultsDocument> {
    let doc = ResultsDocument::load(results_dir)?;
    let digest = dataset_digest(&doc.dataset)?;
    if digest != doc.digest {
        return Err(Error::Stale(format!(
            "annotations under {} changed since evaluation (digest {} != recorded {})",
            doc.dataset.display(),
            short(&digest),
            short(&doc.digest)
        )));
    }
    let dataset = load_dataset(&doc.dataset)?;
    let mut out = ResultsDocument::new(doc.dataset.clone(), digest);
    for (label, by_protocol) in &doc.entries {
        for (&protocol, entry) in by_protocol {
            let dir = run_dir(results_dir, label, protocol);
            let runs = dataset
                .sequences
                .iter()
                .map(|s| Ok((s.name().to_string(), load_runs(&dir, s, protocol)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let fresh = Entry::compute(
                &entry.tracker,
                protocol,
                entry.rte_latency_ms,
                &dataset,
                &runs,
            )?;
            out.entries
                .entry(label.clone())
                .or_default()
                .insert(protocol, fresh);
        }
    }
    Ok(out)
}

fn short(digest: &str) -> &str {
    &digest[..digest.len().min(12)]
}
