use std::path::{Path, PathBuf};

use specaug::analysis::AnalysisError;
use specaug::linalg::{LinalgError, MatrixIoError};
use specaug::ops::OpsError;
use specaug::special::SpecialError;
use thiserror::Error;

/// Process exit statuses. The numeric values are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitStatus {
    Success = 0,
    /// `verify` found at least one failing invariant.
    VerifyFailed = 1,
    Io = 2,
    Validation = 3,
    Numerical = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Io { .. } => ExitStatus::Io,
            CliError::Validation(_) => ExitStatus::Validation,
            CliError::Numerical(_) => ExitStatus::Numerical,
        }
    }

    /// Errors from reading a matrix file: unreadable files are I/O failures,
    /// malformed contents are validation failures.
    pub fn matrix_file(path: &Path, err: MatrixIoError) -> Self {
        match err {
            MatrixIoError::Io(source) => CliError::io(path, source),
            other => CliError::Validation(format!("{}: {other}", path.display())),
        }
    }
}

fn linalg_is_validation(e: &LinalgError) -> bool {
    !matches!(
        e,
        LinalgError::NoConvergence { .. } | LinalgError::Singular { .. } | LinalgError::Overflow { .. }
    )
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        if linalg_is_validation(&e) {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<OpsError> for CliError {
    fn from(e: OpsError) -> Self {
        match e {
            OpsError::Linalg(inner) => inner.into(),
            OpsError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SpecialError> for CliError {
    fn from(e: SpecialError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Special(inner) => inner.into(),
            AnalysisError::Linalg(inner) => inner.into(),
            AnalysisError::Ops(inner) => inner.into(),
            AnalysisError::InvalidInput(_) => CliError::Validation(e.to_string()),
            AnalysisError::NegativeVariance(_) => CliError::Numerical(e.to_string()),
        }
    }
}
