//! Spectral augmentation operators.
//!
//! Every operator maps a feature map `H` (n × d) to an augmented `H̃` of the
//! same shape. Randomness comes only from the explicit [`RngStream`], in the
//! documented order, so outputs are reproducible bit-for-bit.

mod newton_schulz;
mod precondition;
mod rebalance;
mod sfa;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{FeatureMap, LinalgError, RngStream};

pub use newton_schulz::{newton_schulz, NewtonSchulz, DEFAULT_NS_ITERS, LEGACY_NS_ITERS};
pub use precondition::{lu_precondition, Preconditioned, RECOVERY_METHOD};
pub use rebalance::{
    gram_roots, grassman_flat, maxexp_exponent, maxexp_f, power_norm, GramRoots, GrassmanOutput, MaxExpOutput,
    PowerNormOutput,
};
pub use sfa::{
    conservation_residual, sfa_backward, sfa_closed_form_k1, sfa_forward, sfa_from_init, SfaOutput, MAX_DRAW_ATTEMPTS,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OpsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid operator parameters: {0}")]
    InvalidSpec(String),
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Newton-Schulz diverged at iteration {iteration} (relative residual {residual:e})")]
    Divergence { iteration: u32, residual: f64 },
    #[error("Gram matrix is singular or too ill-conditioned (‖AB - I‖_F = {inverse_residual:e})")]
    IllConditioned { inverse_residual: f64 },
    #[error("power-iteration vector vanished in {attempts} draws")]
    DegenerateDraw { attempts: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormVariant {
    Plain,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdMode {
    Exact,
    Randomized,
}

fn default_k() -> u32 {
    1
}

fn default_ns_iters() -> u32 {
    DEFAULT_NS_ITERS
}

/// Operator choice and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentSpec {
    /// Incomplete power iteration with `k` steps.
    Sfa {
        #[serde(default = "default_k")]
        k: u32,
    },
    /// `H B (I - (I - A/Tr A)^(η+Δη))` with `Δη ~ noise_scale·N(0, 1)`.
    MaxExpF {
        eta: f64,
        #[serde(default)]
        noise_scale: f64,
        #[serde(default = "default_ns_iters")]
        ns_iters: u32,
    },
    /// Push-forward `(1-β̃)σ^0.5 + β̃σ^0.75` with `β̃ = β + Δβ`.
    PowerNorm {
        beta: f64,
        #[serde(default)]
        noise_scale: f64,
        variant: PowerNormVariant,
        #[serde(default = "default_ns_iters")]
        ns_iters: u32,
    },
    /// The `kappa` leading singular values become `1 + Δκᵢ`, the rest 0.
    Grassman {
        kappa: usize,
        #[serde(default)]
        noise_scale: f64,
        svd_mode: SvdMode,
        #[serde(default = "default_ns_iters")]
        ns_iters: u32,
    },
    /// LU preconditioning baseline.
    Precondition {},
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec::Sfa { k: 1 }
    }
}

impl AugmentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentSpec::Sfa { .. } => "sfa",
            AugmentSpec::MaxExpF { .. } => "max_exp_f",
            AugmentSpec::PowerNorm { .. } => "power_norm",
            AugmentSpec::Grassman { .. } => "grassman",
            AugmentSpec::Precondition {} => "precondition",
        }
    }

    /// Check parameter ranges that do not depend on the input matrix.
    pub fn validate(&self) -> Result<(), OpsError> {
        let bad = |msg: String| Err(OpsError::InvalidSpec(msg));
        let check_noise = |n: f64| {
            if n.is_finite() && n >= 0.0 {
                Ok(())
            } else {
                Err(OpsError::InvalidSpec(format!(
                    "noise_scale must be finite and >= 0, got {n}"
                )))
            }
        };
        let check_ns = |z: u32| {
            if z >= 1 {
                Ok(())
            } else {
                Err(OpsError::InvalidSpec("ns_iters must be at least 1".into()))
            }
        };
        match *self {
            AugmentSpec::Sfa { .. } | AugmentSpec::Precondition {} => Ok(()),
            AugmentSpec::MaxExpF {
                eta,
                noise_scale,
                ns_iters,
            } => {
                if !(eta.is_finite() && eta > 0.0) {
                    return bad(format!("eta must be positive and finite, got {eta}"));
                }
                check_noise(noise_scale)?;
                check_ns(ns_iters)
            }
            AugmentSpec::PowerNorm {
                beta,
                noise_scale,
                ns_iters,
                ..
            } => {
                if !(0.0..=1.0).contains(&beta) {
                    return bad(format!("beta must lie in [0, 1], got {beta}"));
                }
                check_noise(noise_scale)?;
                check_ns(ns_iters)
            }
            AugmentSpec::Grassman {
                kappa,
                noise_scale,
                ns_iters,
                ..
            } => {
                if kappa == 0 {
                    return bad("kappa must be at least 1".into());
                }
                check_noise(noise_scale)?;
                check_ns(ns_iters)
            }
        }
    }
}

/// Result of [`augment`] together with run metadata.
#[derive(Debug, Clone)]
pub struct AugmentOutput {
    pub augmented: FeatureMap,
    /// Standard-normal draws consumed from the stream.
    pub draws: u64,
    /// `|‖H̃‖_F² + ‖H r̂‖² - ‖H‖_F²| / ‖H‖_F²` for SFA; `None` otherwise.
    pub conservation_residual: Option<f64>,
    /// Final relative residual `‖AA - M‖_F / ‖M‖_F` of the Gram square root
    /// for the Newton-Schulz based operators.
    pub ns_residual: Option<f64>,
    pub notes: Vec<String>,
}

/// Apply the operator selected by `spec`.
pub fn augment(h: &FeatureMap, spec: &AugmentSpec, stream: RngStream) -> Result<AugmentOutput, OpsError> {
    spec.validate()?;
    let mut out = AugmentOutput {
        augmented: h.clone(),
        draws: 0,
        conservation_residual: None,
        ns_residual: None,
        notes: Vec::new(),
    };
    match *spec {
        AugmentSpec::Sfa { k } => {
            let s = sfa_forward(h, k, stream)?;
            out.conservation_residual = Some(conservation_residual(h, &s));
            out.draws = s.draws;
            if s.attempts > 1 {
                out.notes.push(format!("r0 resampled; accepted draw {}", s.attempts));
            }
            out.augmented = s.augmented;
        }
        AugmentSpec::MaxExpF { .. } => {
            let r = maxexp_f(h, spec, stream)?;
            out.augmented = r.augmented;
            out.draws = 1;
            out.ns_residual = Some(r.roots.residual);
            out.notes.push(format!("integer exponent {}", r.exponent));
        }
        AugmentSpec::PowerNorm { .. } => {
            let r = power_norm(h, spec, stream)?;
            out.augmented = r.augmented;
            out.draws = 1;
            out.ns_residual = Some(r.roots.residual);
            out.notes.push(format!("effective beta {}", r.beta));
        }
        AugmentSpec::Grassman { kappa, svd_mode, .. } => {
            let r = grassman_flat(h, spec, stream)?;
            out.augmented = r.augmented;
            out.draws = kappa as u64;
            out.ns_residual = Some(r.roots.residual);
            if svd_mode == SvdMode::Randomized {
                out.notes.push("randomized SVD sketch drawn from sub-stream 1".into());
            }
        }
        AugmentSpec::Precondition {} => {
            let p = lu_precondition(h)?;
            out.augmented = p.augmented;
            out.ns_residual = Some(p.ns_residual);
            out.notes.push(format!("recovery: {RECOVERY_METHOD}"));
        }
    }
    Ok(out)
}
