//! Training, solving, benchmarking and κ-sweep commands over Solomon-format
//! instance files.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_bench, cmd_solve, cmd_sweep, cmd_train};
pub use config::{Command, RunConfig};
pub use error::{CliError, CliResult};
