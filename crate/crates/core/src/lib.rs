//! Hand segmentation and tracking on fused range-intensity images.
//!
//! The pipeline has three stages: a round-synchronous mutual-best-merge
//! clustering engine over the pixel region-adjacency graph, a two-hand
//! tracker with occlusion handling on top of the per-frame segmentations,
//! and a synthetic ToF scene generator that supplies ground-truthed input.

pub mod cluster;
pub mod config;
pub mod eval;
pub mod frame;
pub mod homogeneity;
pub mod oracle;
pub mod pgm;
pub mod synth;
pub mod tracker;

pub use cluster::{ClipRange, Region, Segmentation};
pub use config::Config;
pub use frame::{CameraIntrinsics, Frame, Point3};
pub use homogeneity::{HomogeneityDescriptor, MergeParams};
pub use tracker::{TrackLog, TrackerParams};

/// Errors shared across the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error at byte offset {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown region id {0}")]
    UnknownRegion(u32),
    #[error("unknown scenario {name:?}; known scenarios: {known}")]
    UnknownScenario { name: String, known: String },
    #[error("merge engine exceeded its round cap (engine bug)")]
    RoundCapExceeded,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
