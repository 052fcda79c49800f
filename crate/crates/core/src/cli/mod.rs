//! Configuration, fixtures and the end-to-end pipeline behind the `nhsl` binary.

pub mod config;
pub mod fixtures;
pub mod pipeline;

pub use config::{ExperimentConfig, FunctionSource, Inputs, Mode, SweepSpec, WeightSpec};
pub use pipeline::{run_pipeline, RunOutcome, Stage, StageError};
