//! Two-view alignment metrics and the InfoNCE loss.

use serde::Serialize;

use crate::linalg::{dot, svd_jacobi, FeatureMap, LinalgError};

use super::{analytic_params, lambda_analytic, AnalysisError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    /// `Tr(HᵅᵀHᵝ) / (nτ)`.
    pub trace_alignment: f64,
    /// `Σᵢ (σᵅᵢ vᵅᵢᵀvᵝᵢ)(σᵝᵢ uᵅᵢᵀuᵝᵢ) / (nτ)` over rank-matched triples.
    pub diagonal_form: f64,
    /// `‖Hᵅ - Hᵝ‖_F²`.
    pub frobenius_gap: f64,
    pub temperature: f64,
    /// Summands of `diagonal_form`, leading index first.
    pub diagonal_terms: Vec<f64>,
}

impl AlignmentReport {
    /// `trace_alignment - diagonal_form`, the contribution of the cross terms
    /// between unmatched singular triples.
    pub fn cross_term_gap(&self) -> f64 {
        self.trace_alignment - self.diagonal_form
    }
}

fn check_views(a: &FeatureMap, b: &FeatureMap, tau: f64) -> Result<(), AnalysisError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "alignment",
            left: a.shape(),
            right: b.shape(),
        }
        .into());
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    Ok(())
}

/// Trace, matched-index and Frobenius alignment of two views.
///
/// Singular triples are paired by rank within each view's own SVD.
pub fn alignment_report(h_alpha: &FeatureMap, h_beta: &FeatureMap, tau: f64) -> Result<AlignmentReport, AnalysisError> {
    check_views(h_alpha, h_beta, tau)?;
    let scale = 1.0 / (h_alpha.rows() as f64 * tau);
    let trace: f64 = h_alpha
        .as_slice()
        .iter()
        .zip(h_beta.as_slice())
        .map(|(x, y)| x * y)
        .sum();
    let frobenius_gap = h_alpha.sub(h_beta)?.frobenius_norm().powi(2);
    let sa = svd_jacobi(h_alpha)?;
    let sb = svd_jacobi(h_beta)?;
    let diagonal_terms: Vec<f64> = (0..sa.rank())
        .map(|i| {
            let v = dot(&sa.v_col(i), &sb.v_col(i));
            let u = dot(&sa.u_col(i), &sb.u_col(i));
            scale * (sa.sigma[i] * v) * (sb.sigma[i] * u)
        })
        .collect();
    Ok(AlignmentReport {
        trace_alignment: scale * trace,
        diagonal_form: diagonal_terms.iter().sum(),
        frobenius_gap,
        temperature: tau,
        diagonal_terms,
    })
}

/// Matched-index alignment after SFA in expectation: each summand of
/// [`AlignmentReport::diagonal_terms`] weighted by `(1 - λᵅᵢ)(1 - λᵝᵢ)` with
/// `λ` from [`lambda_analytic`] on each view's spectrum.
pub fn sfa_alignment_terms(
    h_alpha: &FeatureMap,
    h_beta: &FeatureMap,
    k: u32,
    tau: f64,
) -> Result<Vec<f64>, AnalysisError> {
    let report = alignment_report(h_alpha, h_beta, tau)?;
    let keep = |h: &FeatureMap| -> Result<Vec<f64>, AnalysisError> {
        let sigma = svd_jacobi(h)?.sigma;
        (0..sigma.len())
            .map(|i| {
                if sigma[i] == 0.0 {
                    Ok(1.0)
                } else {
                    Ok(1.0 - lambda_analytic(&analytic_params(&sigma, i, k)?)?)
                }
            })
            .collect()
    };
    let (ka, kb) = (keep(h_alpha)?, keep(h_beta)?);
    Ok(report
        .diagonal_terms
        .iter()
        .zip(ka.iter().zip(&kb))
        .map(|(t, (a, b))| t * a * b)
        .collect())
}

/// InfoNCE loss with anchors taken from the rows of `z_alpha`.
///
/// For anchor `z = zᵅᵢ` the positive is `z⁺ = zᵝᵢ` and the negatives are all
/// other rows of both views. The result is the mean over anchors of
/// `-zᵀz⁺/τ + log(exp(zᵀz⁺/τ) + Σ exp(zᵀz⁻/τ))`.
pub fn info_nce(z_alpha: &FeatureMap, z_beta: &FeatureMap, tau: f64) -> Result<f64, AnalysisError> {
    check_views(z_alpha, z_beta, tau)?;
    let n = z_alpha.rows();
    let mut total = 0.0;
    let mut logits = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        let z = z_alpha.row(i);
        let pos = dot(z, z_beta.row(i)) / tau;
        logits.clear();
        logits.push(pos);
        for j in (0..n).filter(|&j| j != i) {
            logits.push(dot(z, z_alpha.row(j)) / tau);
            logits.push(dot(z, z_beta.row(j)) / tau);
        }
        total += log_sum_exp(&logits) - pos;
    }
    Ok(total / n as f64)
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
