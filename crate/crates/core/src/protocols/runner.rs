use std::time::Instant;

use super::{generate_anchors, Anchor, Protocol, TrackerRun, ANCHOR_INTERVAL};
use crate::dataset::{BoundingBox, Sequence};
use crate::error::{Error, Result};
use crate::tracker::{Frame, Tracker};

/// Guards `floor(t * fps)` against products like `5.999999999999999`.
const FRAME_EPS: f64 = 1e-9;

/// Smallest runtime recorded for a measured call, so a call faster than the
/// clock's resolution still counts as positive time.
const MIN_MEASURED: f64 = 1e-9;

/// Where RTE processing times come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RteClock {
    /// Wall-clock time of each tracker call.
    Measured,
    /// The same latency, in seconds, for every call.
    Constant(f64),
    /// One latency per call in order, initialization first.
    Trace(Vec<f64>),
}

impl RteClock {
    fn injected(&self, step: usize) -> Result<Option<f64>> {
        let v = match self {
            RteClock::Measured => return Ok(None),
            RteClock::Constant(v) => *v,
            RteClock::Trace(vs) => *vs.get(step).ok_or_else(|| {
                Error::Protocol(format!("latency trace exhausted after {} steps", vs.len()))
            })?,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Protocol(format!(
                "latency must be positive, got {v}"
            )));
        }
        Ok(Some(v))
    }
}

fn failure(tracker: &str, frame: usize) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Tracker {
        tracker: tracker.to_string(),
        frame,
        message: e.to_string(),
    }
}

fn timed<T>(call: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = call()?;
    Ok((out, start.elapsed().as_secs_f64().max(MIN_MEASURED)))
}

fn init_at<T: Tracker + ?Sized>(
    tracker: &mut T,
    seq: &Sequence,
    index: usize,
) -> Result<(BoundingBox, f64)> {
    let target = seq.gt(index).ok_or_else(|| {
        Error::Protocol(format!(
            "`{}` has no ground truth at init frame {index}",
            seq.name()
        ))
    })?;
    let frame = Frame::new(index, seq.frames().as_ref());
    let name = tracker.name().to_string();
    tracker.prepare(&frame).map_err(failure(&name, index))?;
    let ((), secs) = timed(|| tracker.init(&frame, target)).map_err(failure(&name, index))?;
    Ok((target, secs))
}

fn update_at<T: Tracker + ?Sized>(
    tracker: &mut T,
    seq: &Sequence,
    index: usize,
) -> Result<(BoundingBox, f64)> {
    let frame = Frame::new(index, seq.frames().as_ref());
    let name = tracker.name().to_string();
    tracker.prepare(&frame).map_err(failure(&name, index))?;
    timed(|| tracker.update(&frame)).map_err(failure(&name, index))
}

/// Initializes on the ground truth of `frames[0]` and updates on every
/// following frame, in the given order.
pub fn run_frames<T: Tracker + ?Sized>(
    tracker: &mut T,
    seq: &Sequence,
    frames: Vec<usize>,
    protocol: Protocol,
) -> Result<TrackerRun> {
    let Some(&first) = frames.first() else {
        return Err(Error::Protocol("empty frame range".into()));
    };
    if let Some(&bad) = frames.iter().find(|&&f| f >= seq.len()) {
        return Err(Error::Protocol(format!(
            "frame {bad} out of range for `{}` ({} frames)",
            seq.name(),
            seq.len()
        )));
    }
    let (init_box, secs) = init_at(tracker, seq, first)?;
    let mut predictions = Vec::with_capacity(frames.len());
    let mut runtimes = Vec::with_capacity(frames.len());
    predictions.push(init_box);
    runtimes.push(secs);
    for &f in &frames[1..] {
        let (b, secs) = update_at(tracker, seq, f)?;
        predictions.push(b);
        runtimes.push(secs);
    }
    Ok(TrackerRun {
        protocol,
        sequence: seq.name().to_string(),
        length: seq.len(),
        processed: frames.clone(),
        frames,
        predictions,
        runtimes,
    })
}

/// One pass from the first frame to the last without resets.
pub fn run_ope<T: Tracker + ?Sized>(tracker: &mut T, seq: &Sequence) -> Result<TrackerRun> {
    run_frames(tracker, seq, (0..seq.len()).collect(), Protocol::Ope)
}

/// One run per anchor, each on a fresh tracker from `factory`.
pub fn run_mse<T, F>(seq: &Sequence, mut factory: F) -> Result<Vec<TrackerRun>>
where
    T: Tracker,
    F: FnMut(&Anchor) -> Result<T>,
{
    generate_anchors(seq, ANCHOR_INTERVAL)?
        .iter()
        .map(|a| run_frames(&mut factory(a)?, seq, a.frames(), Protocol::Mse))
        .collect()
}

/// Real-time run: frame `i` occurs at `i / fps`. After finishing at time
/// `T` the tracker takes the newest frame that has occurred, or waits for
/// the next one; frames it never sees inherit its latest output.
pub fn run_rte<T: Tracker + ?Sized>(
    tracker: &mut T,
    seq: &Sequence,
    clock: &RteClock,
) -> Result<TrackerRun> {
    let n = seq.len();
    let fps = seq.fps();
    let (init_box, measured) = init_at(tracker, seq, 0)?;
    let first = clock.injected(0)?.unwrap_or(measured);

    let mut predictions = vec![init_box];
    let mut processed = vec![0usize];
    let mut runtimes = vec![first];
    let mut now = first;
    let mut last = 0usize;
    while last < n - 1 {
        let newest = (now * fps + FRAME_EPS).floor();
        let next = if newest >= (n - 1) as f64 {
            n - 1
        } else {
            (newest as usize).max(last + 1)
        };
        let start = now.max(next as f64 / fps);
        let (b, measured) = update_at(tracker, seq, next)?;
        let took = clock.injected(processed.len())?.unwrap_or(measured);
        let held = predictions[last];
        predictions.extend(std::iter::repeat_n(held, next - last - 1));
        predictions.push(b);
        processed.push(next);
        runtimes.push(took);
        now = start + took;
        last = next;
    }
    Ok(TrackerRun {
        protocol: Protocol::Rte,
        sequence: seq.name().to_string(),
        length: n,
        frames: (0..n).collect(),
        predictions,
        processed,
        runtimes,
    })
}

/// Runs `protocol` over `seq`, asking `factory` for a fresh tracker per run
/// (with the anchor for MSE runs).
pub fn run_protocol<T, F>(
    protocol: Protocol,
    seq: &Sequence,
    clock: &RteClock,
    mut factory: F,
) -> Result<Vec<TrackerRun>>
where
    T: Tracker,
    F: FnMut(Option<&Anchor>) -> Result<T>,
{
    match protocol {
        Protocol::Ope => Ok(vec![run_ope(&mut factory(None)?, seq)?]),
        Protocol::Mse => run_mse(seq, |a| factory(Some(a))),
        Protocol::Rte => Ok(vec![run_rte(&mut factory(None)?, seq, clock)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::iou;
    use crate::protocols::{measure_fps, sequence_scores, Direction};
    use crate::tracker::{FailAfterTracker, OracleTracker, StaticTracker};

    fn moving(n: usize) -> Sequence {
        let boxes = (0..n)
            .map(|i| Some(BoundingBox::new(i as f64, 0.0, 10.0, 10.0).unwrap()))
            .collect();
        Sequence::builder("m", boxes).build().unwrap()
    }

    /// Records every call it receives.
    #[derive(Default)]
    struct Recorder {
        inits: Vec<(usize, BoundingBox)>,
        updates: Vec<usize>,
        fail_at: Option<usize>,
    }

    impl Tracker for Recorder {
        fn name(&self) -> &str {
            "recorder"
        }
        fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
            self.inits.push((frame.index(), target));
            Ok(())
        }
        fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
            if self.fail_at == Some(frame.index()) {
                return Err(Error::Bridge("adapter error: boom".into()));
            }
            self.updates.push(frame.index());
            Ok(BoundingBox::new(frame.index() as f64, 0.0, 10.0, 10.0).unwrap())
        }
        fn is_deterministic(&self) -> bool {
            true
        }
    }

    #[test]
    fn ope_oracle_and_static() {
        let s = moving(20);
        let run = run_ope(&mut OracleTracker::new(&s), &s).unwrap();
        assert_eq!(run.predictions_by_frame(), s.boxes());
        let run = run_ope(&mut StaticTracker::new(), &s).unwrap();
        assert!(run.predictions.iter().all(|b| *b == s.gt(0).unwrap()));
        assert_eq!(run.runtimes.len(), 20);
        assert!(run.runtimes.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn ope_never_resets() {
        let s = moving(30);
        let mut t = Recorder::default();
        let run = run_ope(&mut t, &s).unwrap();
        assert_eq!(t.inits.len(), 1);
        assert_eq!(t.updates, (1..30).collect::<Vec<_>>());
        assert_eq!(run.updates(), 29);
        let run = run_ope(&mut FailAfterTracker::new(&s, 5), &s).unwrap();
        assert_eq!(run.updates(), 29);
    }

    #[test]
    fn tracker_failure_names_frame() {
        let s = moving(10);
        let mut t = Recorder {
            fail_at: Some(3),
            ..Default::default()
        };
        match run_ope(&mut t, &s) {
            Err(Error::Tracker {
                tracker,
                frame,
                message,
            }) => {
                assert_eq!((tracker.as_str(), frame), ("recorder", 3));
                assert!(message.contains("boom"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mse_backward_anchor_sees_descending_frames() {
        let s = moving(300);
        let mut seen = Vec::new();
        let runs = run_mse(&s, |a| {
            seen.push(*a);
            Ok(Recorder::default())
        })
        .unwrap();
        assert_eq!(runs.len(), 4);
        let last = &runs[3];
        assert_eq!(seen[3].direction, Direction::Backward);
        assert_eq!(last.frames[0], 299);
        assert_eq!(last.frames, (0..300).rev().collect::<Vec<_>>());
        assert_eq!(last.predictions[0], s.gt(299).unwrap());
        assert_eq!(last.anchor(), Some(seen[3]));

        let oracle = run_mse(&s, |_| Ok(OracleTracker::new(&s))).unwrap();
        let sc = sequence_scores(&oracle, &s).unwrap();
        assert_eq!((sc.ss, sc.nps, sc.gsr), (1.0, 1.0, 1.0));
    }

    #[test]
    fn mse_score_ignores_anchor_order() {
        let s = moving(300);
        let mut runs = run_mse(&s, |_| Ok(StaticTracker::new())).unwrap();
        let a = sequence_scores(&runs, &s).unwrap();
        runs.reverse();
        let b = sequence_scores(&runs, &s).unwrap();
        assert!((a.ss - b.ss).abs() < 1e-12 && (a.gsr - b.gsr).abs() < 1e-12);
    }

    #[test]
    fn rte_constant_latency_skips_frames() {
        let s = moving(30);
        let run = run_rte(&mut Recorder::default(), &s, &RteClock::Constant(0.05)).unwrap();
        assert_eq!(
            run.processed,
            (0..30).step_by(3).chain([29]).collect::<Vec<_>>()
        );
        assert!((measure_fps(&run).unwrap() - 20.0).abs() < 1e-9);
        // skipped frames hold the latest output
        assert_eq!(run.predictions[4], run.predictions[3]);
        assert_eq!(run.predictions[5].x(), 3.0);
        assert_eq!(run.predictions[6].x(), 6.0);
    }

    #[test]
    fn rte_fast_tracker_matches_ope() {
        let s = moving(40);
        let rte = run_rte(&mut Recorder::default(), &s, &RteClock::Constant(0.001)).unwrap();
        let ope = run_ope(&mut Recorder::default(), &s).unwrap();
        assert_eq!(rte.processed, (0..40).collect::<Vec<_>>());
        assert_eq!(rte.predictions, ope.predictions);
        let exact = run_rte(
            &mut Recorder::default(),
            &s,
            &RteClock::Constant(1.0 / 60.0),
        )
        .unwrap();
        assert_eq!(exact.predictions, ope.predictions);
    }

    #[test]
    fn rte_long_latency_jumps_to_last_frame() {
        let s = moving(10);
        let run = run_rte(&mut Recorder::default(), &s, &RteClock::Constant(5.0)).unwrap();
        assert_eq!(run.processed, [0, 9]);
        assert!(run.predictions[1..9].iter().all(|b| *b == s.gt(0).unwrap()));
        assert_eq!(iou(&run.predictions[9], &s.gt(9).unwrap()), 1.0);
    }

    #[test]
    fn rte_rejects_bad_latencies() {
        let s = moving(10);
        assert!(run_rte(&mut Recorder::default(), &s, &RteClock::Constant(0.0)).is_err());
        assert!(run_rte(
            &mut Recorder::default(),
            &s,
            &RteClock::Trace(vec![0.01, -1.0])
        )
        .is_err());
        assert!(run_rte(&mut Recorder::default(), &s, &RteClock::Trace(vec![0.01])).is_err());
    }

    #[test]
    fn rte_measured_records_positive_times() {
        let s = moving(10);
        let run = run_rte(&mut Recorder::default(), &s, &RteClock::Measured).unwrap();
        assert_eq!(run.processed[0], 0);
        assert!(run.processed.windows(2).all(|w| w[0] < w[1]));
        assert!(run.runtimes.iter().all(|&t| t > 0.0));
    }
}
