//! Scenario runner on top of [`dsr_core`]: TOML configs, a rayon drop engine
//! that is bit-reproducible across worker counts, JSON result bundles, CSV
//! plot data and the `dsr` command line.

pub mod bundle;
pub mod cli;
pub mod commands;
pub mod config;
pub mod engine;
mod error;
pub mod planning;

pub use dsr_core as core;
pub use error::{CliError, Result};
