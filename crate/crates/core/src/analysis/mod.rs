//! Verification engine for the rebalanced spectrum: analytical moments and
//! their quadrature and Monte Carlo oracles, push-forward profiles,
//! alignment metrics and bound calculators.

mod alignment;
mod bounds;
mod moments;
mod monte_carlo;
mod profile;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::ops::OpsError;
use crate::special::SpecialError;

pub use alignment::{alignment_report, info_nce, sfa_alignment_terms, AlignmentReport};
pub use bounds::{
    generalization_bound, noise_bound, phi_upper_bound, subspace_perturbation_check, PerturbationCheck, Verdict,
    PERTURBATION_SLACK,
};
pub use moments::{
    analytic_params, density_mass, lambda_analytic, lambda_quadrature, variance_analytic, variance_quadrature,
    QUADRATURE_TOL, VARIANCE_CONSTANTS,
};
pub use monte_carlo::{chunked_moments, lambda_monte_carlo, McEstimate, Moments, CHUNK_TRIALS};
pub use profile::{
    maxexp_profile, phi_analytic, push_forward_profile, MaxExpProfile, ProfileMode, PushForwardProfile,
    BASIS_SUBSTREAM, MATRIX_ROWS, MAXEXP_CSV_HEADER, PROFILE_CSV_HEADER,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("variance evaluated to {0:e}, below the roundoff allowance")]
    NegativeVariance(f64),
}
