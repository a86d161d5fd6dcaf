//! Library surface of the experiment runner: configuration, run
//! manifests and the stage pipeline. The `div2vec` binary is a thin
//! argument parser over [`pipeline`].

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use pipeline::{run_figure2, run_pipeline, Pipeline, PipelineError, PipelineOutcome};
