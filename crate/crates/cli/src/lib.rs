//! Batch experiments for `mecpart`: TOML configs, seeded sweeps and CSV reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod report;

pub use config::{ExperimentConfig, SolverKind};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, summarize, ExperimentReport, RunRecord, SummaryRow};
pub use report::{replay, write_report, Manifest};
