//! Configuration, scenario runs and CSV output for the `eit` command.

pub mod config;
pub mod error;
pub mod scenario;
pub mod table;

pub use config::{load, parse_config, Config};
pub use error::{CliError, CliResult};
pub use scenario::{compute, run, Output, Scenario, Written};
