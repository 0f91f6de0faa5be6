//! Configuration, presets and scenario runner behind the `wgsqz` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod presets;
pub mod run;

pub use config::{parse_config, resolve, Overrides, Scenario, ScenarioConfig};
pub use error::{CliError, ConfigError};
pub use run::{run, RunReport};
