//! Library side of the `pointhartree` command-line tool.

pub mod config;
pub mod fields;
pub mod output;
pub mod run;

pub use config::{parse_config, Command, ConfigError, RawConfig, RunConfig};
pub use run::{run, Outcome, RunError, EXIT_OK, EXIT_PHYSICS, EXIT_USAGE};
