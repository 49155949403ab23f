//! Scenario files, the `drds` command set, policy files and run reports.

pub mod check;
pub mod commands;
mod error;
pub mod format;
pub mod policy_file;
pub mod report;
pub mod scenario_file;

pub use commands::{run, Command, Options};
pub use error::{CliError, Result};
