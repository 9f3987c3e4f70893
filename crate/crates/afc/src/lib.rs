//! File formats and the command-line driver around `afc-core`.
//!
//! The binary writes three artifacts into its output directory:
//! `report.csv` (errors and rates per level), `solution.vtk` (legacy ASCII
//! field for visualization) and `audit.csv` (maximum-principle checks).
//! A `metadata.txt` next to them records the configuration of the run.

pub mod cli;
pub mod csv;
pub mod vtk;

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad command-line input; maps to exit code 1.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] afc_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
