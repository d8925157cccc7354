//! Config-driven experiment runner for the `cqmarina` library.
//!
//! The binary is a thin layer over [`execute`] and [`seed_report`]; tests
//! drive the same functions directly.

pub mod config;
mod error;
pub mod experiment;
mod seeds;

use std::path::{Path, PathBuf};

pub use config::{load, ExperimentConfig, ExperimentKind, MethodSpec, Resolved};
pub use error::CliError;
pub use experiment::{execute, CellResult, RunOptions, RunReport};
pub use seeds::seed_report;

/// Default output directory when neither the flag, `OUTPUT_DIR` nor the
/// config names one.
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// `--out`, then the `OUTPUT_DIR` environment variable, then the config's
/// `output_dir`, then [`DEFAULT_OUTPUT_DIR`].
pub fn output_dir(flag: Option<&Path>, env: Option<&str>, cfg: &Resolved) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    cfg.raw.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}
