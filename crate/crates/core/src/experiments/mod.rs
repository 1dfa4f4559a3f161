//! Experiment drivers behind the command-line front end.

mod commands;
pub mod config;
pub mod format;

use thiserror::Error;

pub use commands::{
    cmd_cycle_time, cmd_residual_cdf, cmd_sojourn_sweep, cmd_validate, Check, CycleOptions, CycleRow, ResidualOptions,
    ResidualOutput, ResidualRow, SweepOptions, SweepRow, ValidateOptions, ValidationReport, SWEEP_HEADER,
};
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
