//! Loop-closure candidate detection over anchored scene graphs.
//!
//! The crate ingests per-frame semantic detections and visual keypoints,
//! filters unstable objects, builds tiered scene graphs anchored on the
//! remaining detections, and scores frame pairs with an iterative
//! relabeling subgraph kernel combined with a temporal constraint. A
//! small trainable detector (or a plain score threshold) turns pair
//! scores into loop-closure candidates, and an evaluation harness
//! reports precision/recall, first-detection frames, and tier ablations.
//!
//! The primary entry points are the modules below; each major capability
//! also has a runnable demo under `examples/`:
//!
//! * `cargo run --example generate_dataset` — synthetic sequence generation
//! * `cargo run --example scene_graphs` — tiered graph construction and export
//! * `cargo run --example kernel_similarity` — pairwise graph kernel scores
//! * `cargo run --example temporal_scoring` — temporal constraint behaviour
//! * `cargo run --example vocabulary_scoring` — visual-word pair scores
//! * `cargo run --example train_detector` — detector training and prediction
//! * `cargo run --example ablation_report` — full tier ablation on a benchmark
//!
//! The same functionality is reachable from the `loopgraph` binary, which
//! exposes `synth`, `validate`, `build-graphs`, `score`, `train`,
//! `predict`, `evaluate`, and `ablate` subcommands.

pub mod cli;
pub mod config;
pub mod eval;
pub mod ingest;
pub mod labelmatch;
pub mod objfilter;
pub mod pipeline;
pub mod predictor;
pub mod scenegraph;
pub mod synth;
pub mod vbow;
pub mod wlkernel;

pub use config::{PipelineConfig, TemporalMode, TierMode};
pub use ingest::{Dataset, Detection, FrameAnnotation, GroundTruth, Keypoint};
pub use scenegraph::SceneGraph;
