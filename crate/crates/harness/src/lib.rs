//! Trace generation, experiment orchestration, and report emission around the
//! `qvr-core` simulator.

pub mod calibration;
pub mod config;
pub mod experiment;
pub mod imageio;
pub mod plots;
pub mod presets;
pub mod schema;
pub mod trace;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] qvr_core::Error),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("{0}")]
    Spec(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("schema check failed: {0}")]
    Schema(String),

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("{failed} of {total} sweep cells failed: {first}")]
    PartialSweep { failed: usize, total: usize, first: String },
}

impl HarnessError {
    pub fn csv(path: &Path, err: csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line());
        Self::Parse {
            path: path.to_path_buf(),
            line,
            message: err.to_string(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
