//! Configuration, stage runner and static reports for the `topicalign`
//! command-line pipeline.

pub mod bundle;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, run_stages, Manifest, Stage};
