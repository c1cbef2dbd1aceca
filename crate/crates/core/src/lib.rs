//! Engine and benchmark harness for information-mining token merging in
//! divided space-time video transformers.
//!
//! The crate provides a deterministic encoder with temporal and spatial merge
//! hooks, a joint-merging baseline with unmerging, an analytic cost model, a
//! synthetic clip generator with ground-truth dynamic masks, similarity and
//! information-bottleneck diagnostics, and an experiment runner with stable
//! JSON/CSV outputs.

pub mod analysis;
pub mod baseline;
pub mod config;
pub mod cost;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod kernels;
pub mod merge;
pub mod options;
pub mod report;
pub mod schedule;
pub mod synth;
pub mod tensorfile;
pub mod video;

pub use config::ModelConfig;
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig};
pub use grid::{ProvenanceMap, TokenGrid};
pub use options::{MergeOptions, MergePolicy};
pub use schedule::{LayerPlan, MergeKind, MergeSchedule, SegmentRule};
