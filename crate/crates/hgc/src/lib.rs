//! File formats, artifact manifest, stage runner and command line around
//! `hgc-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod stages;
pub mod sweep;

pub use cli::run_cli;
pub use error::{CliError, CliResult};
