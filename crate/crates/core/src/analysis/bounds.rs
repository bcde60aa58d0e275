//! Bound calculators: the nearest-neighbour error factor, the element-wise
//! noise bound, the leading-subspace perturbation inequality and the upper
//! envelope of the push-forward.

use std::f64::consts::PI;

use serde::Serialize;

use crate::linalg::{norm2, svd_jacobi, FeatureMap, LinalgError};

use super::AnalysisError;

/// Roundoff allowance when comparing the two sides of the perturbation
/// inequality.
pub const PERTURBATION_SLACK: f64 = 1e-12;

/// `R_ε ≤ √(2 - 2 L_a) / ε`.
pub fn generalization_bound(l_a: f64, eps: f64) -> Result<f64, AnalysisError> {
    if !(l_a <= 1.0) || !l_a.is_finite() {
        return Err(AnalysisError::InvalidInput(format!(
            "alignment must be finite and at most 1, got {l_a}"
        )));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    Ok((2.0 - 2.0 * l_a).sqrt() / eps)
}

/// Element-wise noise level `η = 2εΔσ̃₁₂ / (nπ + 2ε)`.
pub fn noise_bound(eps: f64, n: u64, gap: f64) -> Result<f64, AnalysisError> {
    if !(eps > 0.0 && eps.is_finite() && gap > 0.0 && gap.is_finite()) || n == 0 {
        return Err(AnalysisError::InvalidInput(format!(
            "eps, n and gap must be positive, got ({eps}, {n}, {gap})"
        )));
    }
    Ok(2.0 * eps * gap / (n as f64 * PI + 2.0 * eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// `‖E‖₂ ≥ Δσ₁₂/2`, outside the region where the bound is stated.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationCheck {
    /// `‖v₁ - ṽ₁‖₂` after matching the sign of `ṽ₁`.
    pub lhs: f64,
    /// `π‖E‖₂ / (2(Δσ₁₂ - ‖E‖₂))`.
    pub rhs: f64,
    pub gap: f64,
    pub e_norm: f64,
    pub verdict: Verdict,
}

/// Compare the leading right singular vectors of `h` and `h + e` against
/// `‖v₁ - ṽ₁‖₂ ≤ π‖E‖₂ / (2(Δσ₁₂ - ‖E‖₂))`, with `Δσ₁₂` the gap of `h`.
pub fn subspace_perturbation_check(h: &FeatureMap, e: &FeatureMap) -> Result<PerturbationCheck, AnalysisError> {
    if h.shape() != e.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "subspace_perturbation_check",
            left: h.shape(),
            right: e.shape(),
        }
        .into());
    }
    let base = svd_jacobi(h)?;
    let perturbed = svd_jacobi(&h.add(e)?)?;
    let e_norm = svd_jacobi(e)?.sigma[0];
    let gap = base.sigma[0] - base.sigma.get(1).copied().unwrap_or(0.0);

    let v = base.v_col(0);
    let vt = perturbed.v_col(0);
    let minus: Vec<f64> = v.iter().zip(&vt).map(|(a, b)| a - b).collect();
    let plus: Vec<f64> = v.iter().zip(&vt).map(|(a, b)| a + b).collect();
    let lhs = norm2(&minus).min(norm2(&plus));

    let applicable = e_norm < 0.5 * gap;
    let rhs = if applicable {
        PI * e_norm / (2.0 * (gap - e_norm))
    } else {
        f64::INFINITY
    };
    let verdict = if !applicable {
        Verdict::NotApplicable
    } else if lhs <= rhs + PERTURBATION_SLACK {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(PerturbationCheck {
        lhs,
        rhs,
        gap,
        e_norm,
        verdict,
    })
}

/// `φ̄(σᵢ) = min(σᵢ, max_{j≠i} σⱼ)` for index `i` (zero-based).
pub fn phi_upper_bound(sigma: &[f64], i: usize) -> Result<f64, AnalysisError> {
    if sigma.len() < 2 || i >= sigma.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least two values and a valid index, got {} values and index {i}",
            sigma.len()
        )));
    }
    let others = sigma
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(sigma[i].min(others))
}
