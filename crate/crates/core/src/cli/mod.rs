//! Configured runs of the full workflow and their file formats.

mod commands;
mod config;
mod formats;

pub use commands::*;
pub use config::{ModelKind, ModelSection, PipelineSection, RunConfig, ScenarioSection, Seeds};
pub use formats::*;
