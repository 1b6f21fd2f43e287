//! Tracker contract, reference and scripted trackers, the long-term
//! re-detection orchestrator, and the name registry used by the CLI.

mod longterm;
mod ncc;
mod registry;
mod scripted;

use std::path::PathBuf;
use std::sync::Arc;

pub use longterm::{
    Candidate, LongTermTracker, OrchestratorConfig, ReDetector, StepOutcome, Verifier,
};
pub use ncc::{GrayTemplate, NccTracker, TemplateReDetector, TemplateVerifier};
pub use registry::{RegistryOptions, TrackerSpec};
pub use scripted::{FailAfterTracker, OffsetTracker, OracleTracker, StaticTracker};

use crate::dataset::{BoundingBox, FrameSource, Image};
use crate::error::Result;

/// Handle to one frame as presented to a tracker. `index` is the frame's
/// position in its sequence, whatever order frames are presented in.
#[derive(Clone, Copy)]
pub struct Frame<'a> {
    index: usize,
    source: &'a dyn FrameSource,
}

impl<'a> Frame<'a> {
    pub fn new(index: usize, source: &'a dyn FrameSource) -> Self {
        Self { index, source }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn image(&self) -> Result<Arc<Image>> {
        self.source.image(self.index)
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.source.path(self.index)
    }
}

/// A single-object tracker: initialized once on a known box, then asked for
/// one box per subsequent frame.
pub trait Tracker: Send {
    fn name(&self) -> &str;

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()>;

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox>;

    /// Called before `init`/`update` outside the timed region, so trackers
    /// can stage inputs (e.g. write frame files) without that cost being
    /// counted as processing time.
    fn prepare(&mut self, _frame: &Frame<'_>) -> Result<()> {
        Ok(())
    }

    fn is_deterministic(&self) -> bool;
}

impl<T: Tracker + ?Sized> Tracker for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        (**self).init(frame, target)
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        (**self).update(frame)
    }

    fn prepare(&mut self, frame: &Frame<'_>) -> Result<()> {
        (**self).prepare(frame)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

pub(crate) fn not_initialized(name: &str) -> crate::Error {
    crate::Error::Protocol(format!("tracker `{name}`: update called before init"))
}
