//! Repeated-trial benchmark harness for the `hybrid-elm` solvers.
//!
//! An [`config::ExperimentConfig`] names a dataset, a list of solvers and a
//! set of hidden-layer sizes. [`runner::run_experiment`] repeats random
//! train/test splits, fits every solver on the same hidden output matrix per
//! `(N, trial)` cell and aggregates the results into an
//! [`report::ExperimentReport`].

pub mod config;
pub mod report;
pub mod runner;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::ExperimentConfig;
pub use report::{ExperimentReport, Format};
pub use runner::run_experiment;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(#[source] hybrid_elm::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl BenchError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Dataset(_) => 3,
            BenchError::Output(_) => 1,
        }
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), BenchError> {
    let err = |e: std::io::Error| BenchError::Output(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
