//! Configuration parsing and the `simulate`, `bench`, `certify` and `dwell`
//! commands behind the `etc` binary.

pub mod commands;
pub mod config;

pub use commands::{bench, certify, dwell, simulate, Check, CommandError, DwellReport};
pub use config::{parse_config, Config, ConfigError, PolicyName};
