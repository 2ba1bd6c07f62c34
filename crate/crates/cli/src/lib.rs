//! File formats, configuration, and pipeline orchestration around
//! `scanpath-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod runlog;

pub use error::{CliError, ErrorKind};
