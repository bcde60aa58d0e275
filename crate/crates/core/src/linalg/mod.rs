//! Dense linear algebra and seeded randomness.

mod csv;
mod eigen;
mod lu;
mod matrix;
mod qr;
mod rng;
mod rsvd;
mod spectrum;
mod svd;

use thiserror::Error;

pub use self::csv::{
    format_f64, format_matrix_csv, parse_matrix_csv, read_matrix_csv, write_matrix_csv, MatrixIoError,
};
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use lu::{lu_decompose, LuFactors};
pub use matrix::{dot, norm2, normalize, FeatureMap, Matrix};
pub use qr::{orthonormalize, qr_thin};
pub use rng::{sample_gaussian, GaussianSampler, RngStream};
pub use rsvd::randomized_svd;
pub use spectrum::Spectrum;
pub use svd::{svd_jacobi, SvdFactors};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("data length {actual} does not match shape ({expected} entries expected)")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has {actual} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, actual: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: result overflowed")]
    Overflow { op: &'static str },
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("no convergence after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("zero pivot at step {pivot}")]
    Singular { pivot: usize },
    #[error("rank {rank} exceeds the maximum {max}")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Spectral norm via converged power iteration (relative tolerance `tol`).
pub fn spectral_norm(m: &Matrix, tol: f64) -> f64 {
    m.spectral_norm(tol)
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.frobenius_norm()
}

pub fn transpose(m: &Matrix) -> Matrix {
    m.transpose()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    a.matmul(b)
}
