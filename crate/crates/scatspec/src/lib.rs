//! Driver for the scatspec verification suites: configuration loading,
//! suite dispatch, and the JSON, CSV and text report formats.

pub mod config;
pub mod error;
pub mod report;
pub mod suites;
pub mod validate;

pub use config::{load_config, parse_config, LoadedConfig};
pub use error::CliError;
pub use report::{Report, Status};
