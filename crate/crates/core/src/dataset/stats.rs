use serde::Serialize;

use super::attributes::{center_displacement, is_fast_motion};
use super::Sequence;
use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 32;
/// Log10 range for box areas in px².
pub const AREA_LOG10_RANGE: (f64, f64) = (1.0, 6.0);
/// Log10 range for ratios relative to the first frame.
pub const RATIO_LOG10_RANGE: (f64, f64) = (-1.0, 1.0);

/// Mean normalized center motion between consecutive annotated frames.
///
/// Each pair's center distance is divided by the frame diagonal. With
/// `restrict_to_fm` only pairs that fire the fast-motion rule are averaged.
pub fn fm_motion_quantity(seq: &Sequence, restrict_to_fm: bool) -> Result<f64> {
    let diagonal = (seq.frame_width() as f64).hypot(seq.frame_height() as f64);
    let mut sum = 0.0;
    let mut count = 0usize;
    for pair in seq.boxes().windows(2) {
        let (Some(a), Some(b)) = (pair[0], pair[1]) else {
            continue;
        };
        if restrict_to_fm && !is_fast_motion(&a, &b) {
            continue;
        }
        sum += center_displacement(&a, &b) / diagonal;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Undefined(format!(
            "sequence `{}` has no eligible consecutive annotated frame pair",
            seq.name()
        )));
    }
    Ok(sum / count as f64)
}

/// Fixed-width histogram in log10 space. Values outside the range are
/// clamped into the first or last bin so every sample is counted once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    log10_low: f64,
    log10_high: f64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(log10_range: (f64, f64), bins: usize) -> Self {
        Self {
            log10_low: log10_range.0,
            log10_high: log10_range.1,
            counts: vec![0; bins],
        }
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let n = self.counts.len();
        let t = (value.log10() - self.log10_low) / (self.log10_high - self.log10_low);
        if !(t > 0.0) {
            return 0;
        }
        ((t * n as f64).floor() as usize).min(n - 1)
    }

    pub fn add(&mut self, value: f64) {
        let bin = self.bin_of(value);
        self.counts[bin] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin edges in linear units: `(low, high)` of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let step = (self.log10_high - self.log10_low) / self.counts.len() as f64;
        (
            10f64.powf(self.log10_low + step * i as f64),
            10f64.powf(self.log10_low + step * (i + 1) as f64),
        )
    }

    /// CSV with header `bin_low,bin_high,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.edges(i);
            out.push_str(&format!("{lo},{hi},{c}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStatistics {
    pub area: Histogram,
    /// Area relative to the sequence's first box.
    pub scale_change: Histogram,
    /// Aspect ratio relative to the sequence's first box.
    pub aspect_ratio_change: Histogram,
}

/// Histograms of box area, scale change and aspect-ratio change over every
/// annotated frame of the dataset.
pub fn bbox_statistics(sequences: &[Sequence]) -> Result<BoxStatistics> {
    if sequences.is_empty() {
        return Err(Error::Undefined("statistics of an empty dataset".into()));
    }
    let mut stats = BoxStatistics {
        area: Histogram::new(AREA_LOG10_RANGE, HISTOGRAM_BINS),
        scale_change: Histogram::new(RATIO_LOG10_RANGE, HISTOGRAM_BINS),
        aspect_ratio_change: Histogram::new(RATIO_LOG10_RANGE, HISTOGRAM_BINS),
    };
    for seq in sequences {
        let first = seq
            .gt(0)
            .expect("sequence invariant: first frame annotated");
        for b in seq.boxes().iter().flatten() {
            stats.area.add(b.area());
            stats.scale_change.add(b.area() / first.area());
            stats
                .aspect_ratio_change
                .add(b.aspect_ratio() / first.aspect_ratio());
        }
    }
    Ok(stats)
}
