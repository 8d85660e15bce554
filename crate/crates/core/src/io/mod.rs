//! File formats, bundled reference tables, reports and subcommands.

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod log;
pub mod report;

pub use config::Config;
pub use log::{read_log, read_log_file, write_log, write_log_file, LogHeader, TrialLog};
