//! Evaluation engine for single-object tracking in first-person video.
//!
//! The crate runs trackers under one-pass, multi-start and real-time
//! protocols, scores them with success, normalized precision and generalized
//! success robustness curves, and breaks results down by sequence labels.

pub mod bridge;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod protocols;
pub mod report;
pub mod synth;
pub mod tracker;

pub use dataset::{BoundingBox, Sequence};
pub use error::{Error, Result};
