//! File formats, reports and command-line workflows for ordinal-pattern
//! entropy statistics. The statistics themselves live in `opstat-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod parallel;
pub mod report;

pub use error::CliError;
pub use report::{Format, Report, ReportSpec};
