//! Long-term tracking by verification and global re-detection.
//!
//! Every frame the short-term tracker proposes a box and the verifier scores
//! it. A confident box is output as-is. Otherwise the re-detector's
//! candidates (top `max_candidates` by detector score, or the last output
//! when it finds nothing) are each verified; the most confident one is
//! output and the short-term tracker is re-initialized on it.

use super::{Frame, Tracker};
use crate::dataset::BoundingBox;
use crate::error::{Error, Result};

/// Scores how likely a box contains the target, in `[0, 1]`.
pub trait Verifier: Send {
    fn init(&mut self, _frame: &Frame<'_>, _target: BoundingBox) -> Result<()> {
        Ok(())
    }

    fn score(&mut self, frame: &Frame<'_>, candidate: &BoundingBox) -> Result<f64>;

    /// Online update hook, called with each confidently tracked box.
    fn observe(&mut self, _frame: &Frame<'_>, _target: &BoundingBox) -> Result<()> {
        Ok(())
    }
}

/// Proposes scored target locations over the whole frame.
pub trait ReDetector: Send {
    fn init(&mut self, _frame: &Frame<'_>, _target: BoundingBox) -> Result<()> {
        Ok(())
    }

    fn detect(&mut self, frame: &Frame<'_>) -> Result<Vec<Candidate>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub bbox: BoundingBox,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrchestratorConfig {
    pub confidence_threshold: f64,
    pub max_candidates: usize,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.5,
            max_candidates: 10,
        }
    }
}

impl OrchestratorConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.confidence_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Protocol(format!(
                "confidence threshold {t} outside (0, 1)"
            )));
        }
        if self.max_candidates == 0 {
            return Err(Error::Protocol("max_candidates must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened on the most recent step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// The short-term box passed verification.
    Confident { confidence: f64 },
    /// Re-detection ran; `verified` holds the candidates in ranked order
    /// with their verifier confidences, `chosen` indexes the output.
    Redetected {
        verified: Vec<(BoundingBox, f64)>,
        chosen: usize,
    },
    /// Re-detection found nothing; the last output was re-verified and kept.
    Fallback { confidence: f64 },
}

pub struct LongTermTracker<S, V, R> {
    name: String,
    short_term: S,
    verifier: V,
    redetector: R,
    config: OrchestratorConfig,
    last: Option<BoundingBox>,
    last_outcome: Option<StepOutcome>,
}

impl<S: Tracker, V: Verifier, R: ReDetector> LongTermTracker<S, V, R> {
    pub fn new(
        name: impl Into<String>,
        short_term: S,
        verifier: V,
        redetector: R,
        config: OrchestratorConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            name: name.into(),
            short_term,
            verifier,
            redetector,
            config,
            last: None,
            last_outcome: None,
        })
    }

    pub fn short_term(&self) -> &S {
        &self.short_term
    }

    pub fn verifier(&self) -> &V {
        &self.verifier
    }

    pub fn redetector(&self) -> &R {
        &self.redetector
    }

    pub fn last_outcome(&self) -> Option<&StepOutcome> {
        self.last_outcome.as_ref()
    }

    fn verify(&mut self, frame: &Frame<'_>, b: &BoundingBox) -> Result<f64> {
        let c = self
            .verifier
            .score(frame, b)
            .map_err(|e| Error::Protocol(format!("verifier failed on {b}: {e}")))?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Protocol(format!(
                "verifier confidence {c} outside [0, 1]"
            )));
        }
        Ok(c)
    }

    fn ranked_candidates(&mut self, frame: &Frame<'_>) -> Result<Vec<Candidate>> {
        let mut detections = self
            .redetector
            .detect(frame)
            .map_err(|e| Error::Protocol(format!("re-detector failed: {e}")))?;
        if let Some(bad) = detections.iter().find(|c| !c.score.is_finite()) {
            return Err(Error::Protocol(format!(
                "re-detector returned non-finite score {}",
                bad.score
            )));
        }
        // stable: equal detector scores keep detector order
        detections.sort_by(|a, b| b.score.total_cmp(&a.score));
        detections.truncate(self.config.max_candidates);
        Ok(detections)
    }
}

impl<S: Tracker, V: Verifier, R: ReDetector> Tracker for LongTermTracker<S, V, R> {
    fn name(&self) -> &str {
        &self.name
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        self.short_term.init(frame, target)?;
        self.verifier.init(frame, target)?;
        self.redetector.init(frame, target)?;
        self.last = Some(target);
        self.last_outcome = None;
        Ok(())
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        let last = self
            .last
            .ok_or_else(|| super::not_initialized(&self.name))?;
        let proposal = self.short_term.update(frame)?;
        let confidence = self.verify(frame, &proposal)?;
        if confidence >= self.config.confidence_threshold {
            self.verifier.observe(frame, &proposal)?;
            self.last = Some(proposal);
            self.last_outcome = Some(StepOutcome::Confident { confidence });
            return Ok(proposal);
        }

        let candidates = self.ranked_candidates(frame)?;
        let (output, outcome) = if candidates.is_empty() {
            let confidence = self.verify(frame, &last)?;
            (last, StepOutcome::Fallback { confidence })
        } else {
            let mut verified = Vec::with_capacity(candidates.len());
            for c in &candidates {
                verified.push((c.bbox, self.verify(frame, &c.bbox)?));
            }
            let chosen =
                verified.iter().enumerate().fold(
                    0,
                    |best, (i, (_, c))| if *c > verified[best].1 { i } else { best },
                );
            (
                verified[chosen].0,
                StepOutcome::Redetected { verified, chosen },
            )
        };

        self.short_term.init(frame, output)?;
        self.last = Some(output);
        self.last_outcome = Some(outcome);
        Ok(output)
    }

    fn prepare(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.short_term.prepare(frame)
    }

    fn is_deterministic(&self) -> bool {
        self.short_term.is_deterministic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NoFrames;
    use std::collections::HashMap;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn bx(x: f64) -> BoundingBox {
        BoundingBox::new(x, 0.0, 10.0, 10.0).unwrap()
    }

    #[derive(Default)]
    struct Counters {
        st_init: AtomicUsize,
        st_update: AtomicUsize,
        verify: AtomicUsize,
        detect: AtomicUsize,
    }

    struct MockShortTerm {
        proposal: BoundingBox,
        reset_to: Vec<BoundingBox>,
        calls: Arc<Counters>,
    }

    impl Tracker for MockShortTerm {
        fn name(&self) -> &str {
            "mock-st"
        }
        fn init(&mut self, _: &Frame<'_>, target: BoundingBox) -> Result<()> {
            self.calls.st_init.fetch_add(1, Ordering::SeqCst);
            self.reset_to.push(target);
            Ok(())
        }
        fn update(&mut self, _: &Frame<'_>) -> Result<BoundingBox> {
            self.calls.st_update.fetch_add(1, Ordering::SeqCst);
            Ok(self.proposal)
        }
        fn is_deterministic(&self) -> bool {
            true
        }
    }

    /// Confidence looked up by box x coordinate.
    struct TableVerifier {
        table: HashMap<i64, f64>,
        calls: Arc<Counters>,
    }

    impl Verifier for TableVerifier {
        fn score(&mut self, _: &Frame<'_>, c: &BoundingBox) -> Result<f64> {
            self.calls.verify.fetch_add(1, Ordering::SeqCst);
            Ok(*self.table.get(&(c.x() as i64)).unwrap_or(&0.0))
        }
    }

    struct ListDetector {
        out: Vec<Candidate>,
        calls: Arc<Counters>,
    }

    impl ReDetector for ListDetector {
        fn detect(&mut self, _: &Frame<'_>) -> Result<Vec<Candidate>> {
            self.calls.detect.fetch_add(1, Ordering::SeqCst);
            Ok(self.out.clone())
        }
    }

    fn setup(
        table: &[(i64, f64)],
        detections: Vec<Candidate>,
        config: OrchestratorConfig,
    ) -> (
        LongTermTracker<MockShortTerm, TableVerifier, ListDetector>,
        Arc<Counters>,
    ) {
        let calls = Arc::new(Counters::default());
        let lt = LongTermTracker::new(
            "lt",
            MockShortTerm {
                proposal: bx(5.0),
                reset_to: Vec::new(),
                calls: calls.clone(),
            },
            TableVerifier {
                table: table.iter().copied().collect(),
                calls: calls.clone(),
            },
            ListDetector {
                out: detections,
                calls: calls.clone(),
            },
            config,
        )
        .unwrap();
        (lt, calls)
    }

    #[test]
    fn confident_box_passes_through_without_redetection() {
        let (mut lt, calls) = setup(&[(5, 0.9)], vec![], OrchestratorConfig::default());
        let src = NoFrames;
        lt.init(&Frame::new(0, &src), bx(0.0)).unwrap();
        assert_eq!(lt.update(&Frame::new(1, &src)).unwrap(), bx(5.0));
        assert_eq!(calls.detect.load(Ordering::SeqCst), 0);
        assert_eq!(calls.verify.load(Ordering::SeqCst), 1);
        assert_eq!(calls.st_init.load(Ordering::SeqCst), 1);
        assert_eq!(
            lt.last_outcome(),
            Some(&StepOutcome::Confident { confidence: 0.9 })
        );
    }

    #[test]
    fn low_confidence_selects_most_verified_candidate_and_resets() {
        let dets = vec![
            Candidate {
                bbox: bx(20.0),
                score: 0.8,
            },
            Candidate {
                bbox: bx(30.0),
                score: 0.7,
            },
        ];
        let (mut lt, calls) = setup(
            &[(5, 0.3), (20, 0.4), (30, 0.9)],
            dets,
            OrchestratorConfig::default(),
        );
        let src = NoFrames;
        lt.init(&Frame::new(0, &src), bx(0.0)).unwrap();
        assert_eq!(lt.update(&Frame::new(1, &src)).unwrap(), bx(30.0));
        assert_eq!(calls.detect.load(Ordering::SeqCst), 1);
        assert_eq!(calls.verify.load(Ordering::SeqCst), 3);
        assert_eq!(lt.short_term().reset_to, vec![bx(0.0), bx(30.0)]);
    }

    #[test]
    fn empty_detection_falls_back_to_last_output() {
        let (mut lt, calls) = setup(&[(5, 0.3)], vec![], OrchestratorConfig::default());
        let src = NoFrames;
        lt.init(&Frame::new(0, &src), bx(0.0)).unwrap();
        assert_eq!(lt.update(&Frame::new(1, &src)).unwrap(), bx(0.0));
        assert_eq!(calls.detect.load(Ordering::SeqCst), 1);
        assert!(matches!(
            lt.last_outcome(),
            Some(StepOutcome::Fallback { .. })
        ));
        assert_eq!(lt.short_term().reset_to, vec![bx(0.0), bx(0.0)]);
    }

    #[test]
    fn candidates_truncated_by_detector_score() {
        let dets: Vec<_> = (0..15)
            .map(|i| Candidate {
                bbox: bx(100.0 + i as f64),
                score: i as f64,
            })
            .collect();
        let config = OrchestratorConfig {
            confidence_threshold: 0.5,
            max_candidates: 4,
        };
        // The best-verified box (x=100) has the lowest detector score and is cut.
        let (mut lt, calls) = setup(
            &[(5, 0.1), (100, 1.0), (113, 0.6), (112, 0.7)],
            dets,
            config,
        );
        let src = NoFrames;
        lt.init(&Frame::new(0, &src), bx(0.0)).unwrap();
        assert_eq!(lt.update(&Frame::new(1, &src)).unwrap(), bx(112.0));
        assert_eq!(calls.verify.load(Ordering::SeqCst), 1 + 4);
        let Some(StepOutcome::Redetected { verified, .. }) = lt.last_outcome() else {
            panic!("expected re-detection");
        };
        let xs: Vec<f64> = verified.iter().map(|(b, _)| b.x()).collect();
        assert_eq!(xs, vec![114.0, 113.0, 112.0, 111.0]);
    }

    #[test]
    fn rejects_bad_config_and_confidence() {
        let bad = OrchestratorConfig {
            confidence_threshold: 1.0,
            max_candidates: 10,
        };
        assert!(bad.validate().is_err());
        let bad = OrchestratorConfig {
            confidence_threshold: 0.5,
            max_candidates: 0,
        };
        assert!(bad.validate().is_err());
        let (mut lt, _) = setup(&[(5, 1.5)], vec![], OrchestratorConfig::default());
        let src = NoFrames;
        lt.init(&Frame::new(0, &src), bx(0.0)).unwrap();
        assert!(lt.update(&Frame::new(1, &src)).is_err());
    }
}
