//! Command-line harness: dataset ingestion, the four experiment drivers,
//! and report emission. The binary in this crate exposes them as
//! subcommands; see the repository guide for the full surface.

pub mod dataset;
pub mod experiment;
pub mod report;

pub use dataset::{load_dataset, ScenarioRecord};
pub use experiment::{run_experiment, BackendConfig, ConfigFile, ExperimentConfig, ExperimentOutput, ReportRow};
pub use report::emit_reports;
