use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ResultsDocument, REPORT_DIR};
use crate::error::{Error, Result};
use crate::metrics::LabelKey;
use crate::protocols::Protocol;

/// Four decimals, ties to even.
pub fn format_score(v: f64) -> String {
    // float formatting rounds the exact binary value, ties to even
    format!("{v:.4}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub tracker: String,
    pub ss: f64,
    pub nps: f64,
    pub gsr: f64,
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub label: String,
    pub tracker: String,
    pub ss: f64,
    pub nps: f64,
    pub gsr: f64,
}

fn by_score(a: (f64, f64, &str), b: (f64, f64, &str)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0)
        .then(b.1.total_cmp(&a.1))
        .then(a.2.cmp(b.2))
}

/// Trackers evaluated under `protocol`, best first: SS descending, then
/// NPS descending, then name.
pub fn ranking(doc: &ResultsDocument, protocol: Protocol) -> Vec<RankingRow> {
    let mut rows: Vec<RankingRow> = doc
        .entries
        .iter()
        .filter_map(|(label, m)| m.get(&protocol).map(|e| (label, e)))
        .map(|(label, e)| RankingRow {
            tracker: label.clone(),
            ss: e.overall.ss,
            nps: e.overall.nps,
            gsr: e.overall.gsr,
            fps: e.overall.fps,
        })
        .collect();
    rows.sort_by(|a, b| by_score((a.ss, a.nps, &a.tracker), (b.ss, b.nps, &b.tracker)));
    rows
}

/// One row per (label, tracker), labels in order, trackers ranked within
/// each label.
pub fn breakdown_rows(
    doc: &ResultsDocument,
    protocol: Protocol,
    key: LabelKey,
) -> Vec<BreakdownRow> {
    let mut rows: Vec<BreakdownRow> = doc
        .entries
        .iter()
        .filter_map(|(tracker, m)| m.get(&protocol).map(|e| (tracker, e)))
        .flat_map(|(tracker, e)| {
            e.breakdowns
                .get(&key)
                .into_iter()
                .flatten()
                .map(move |(label, s)| BreakdownRow {
                    label: label.clone(),
                    tracker: tracker.clone(),
                    ss: s.ss,
                    nps: s.nps,
                    gsr: s.gsr,
                })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.label
            .cmp(&b.label)
            .then_with(|| by_score((a.ss, a.nps, &a.tracker), (b.ss, b.nps, &b.tracker)))
    });
    rows
}

impl RankingRow {
    pub const HEADER: &'static str = "tracker,ss,nps,gsr";

    /// `tracker,ss,nps,gsr` with rounded scores.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.tracker,
            format_score(self.ss),
            format_score(self.nps),
            format_score(self.gsr)
        )
    }
}

impl BreakdownRow {
    pub fn header(key: LabelKey) -> String {
        format!("{key},tracker,ss,nps,gsr")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.label,
            self.tracker,
            format_score(self.ss),
            format_score(self.nps),
            format_score(self.gsr)
        )
    }
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    written.push(path);
    Ok(())
}

/// Writes, under `<results_dir>/report/<protocol>/`: `ranking.csv` (with an
/// FPS column), `breakdown_<key>.csv` per label key, and the overall
/// success, normalized precision and robustness curves of every tracker as
/// `curves/<tracker>_<measure>.csv`.
pub fn write_report_files(doc: &ResultsDocument, results_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for protocol in doc.protocols() {
        let dir = results_dir.join(REPORT_DIR).join(protocol.to_string());
        let mut text = String::from("tracker,ss,nps,gsr,fps\n");
        for row in ranking(doc, protocol) {
            let fps = row.fps.map_or_else(String::new, |f| format!("{f:.2}"));
            text += &format!("{},{fps}\n", row.to_csv());
        }
        write(dir.join("ranking.csv"), &text, &mut written)?;

        for key in LabelKey::ALL {
            let mut text = BreakdownRow::header(key) + "\n";
            for row in breakdown_rows(doc, protocol, key) {
                text += &(row.to_csv() + "\n");
            }
            write(
                dir.join(format!("breakdown_{key}.csv")),
                &text,
                &mut written,
            )?;
        }

        for (label, m) in &doc.entries {
            let Some(e) = m.get(&protocol) else { continue };
            let curves = [
                ("success", &e.overall.success),
                ("precision", &e.overall.precision),
                ("robustness", &e.overall.robustness),
            ];
            for (name, curve) in curves {
                let path = dir.join("curves").join(format!("{label}_{name}.csv"));
                write(path, &curve.to_csv(), &mut written)?;
            }
        }
    }
    Ok(written)
}
