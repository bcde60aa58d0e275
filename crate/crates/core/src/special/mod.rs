//! Special functions and adaptive quadrature: log-Gamma, Gauss ₂F₁, the Beta
//! density and the rebalanced-spectrum density `x•(z)`.

mod beta;
mod density;
mod gamma;
mod hyp2f1;
mod quadrature;

use thiserror::Error;

pub use beta::{beta_ln_pdf, beta_pdf};
pub use density::{pdf_x_bullet, pdf_x_bullet_split, AnalyticParams};
pub use gamma::{gamma, gamma_sign_ln, ln_beta, log_gamma, reciprocal_gamma};
pub use hyp2f1::{gauss_2f1, gauss_2f1_complement};
pub use quadrature::{integrate, integrate_with_power, MAX_DEPTH};

pub(crate) use gamma::is_nonpositive_integer;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecialError {
    #[error("{func}: {detail}")]
    Domain { func: &'static str, detail: String },
    #[error("argument {0} is a pole")]
    Pole(f64),
    #[error("hypergeometric series diverges at unit argument (c - a - b = {excess})")]
    Divergent { excess: f64 },
    #[error("series did not converge within {terms} terms")]
    SeriesNonConvergence { terms: usize },
    #[error("quadrature estimate {estimate} has error {error}, above tolerance {tol}")]
    QuadratureTolerance { estimate: f64, error: f64, tol: f64 },
    #[error("integrand is not finite at {0}")]
    NonFiniteIntegrand(f64),
    #[error("density denominator underflowed (gamma = {gamma})")]
    Underflow { gamma: f64 },
}
