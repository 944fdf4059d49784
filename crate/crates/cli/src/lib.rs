//! Experiment harness over `slr_core`: configuration, the experiments
//! behind each subcommand, and CSV/SVG output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, RunOptions, Sampler, SearchMode, TreeSpec};
pub use error::{CliError, CliResult};
