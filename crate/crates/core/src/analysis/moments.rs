//! Analytical expectation and variance of the rebalancing coefficient, with
//! quadrature oracles for both.

use crate::special::{gauss_2f1_complement, integrate_with_power, log_gamma, pdf_x_bullet_split, AnalyticParams};

use super::AnalysisError;

/// Absolute tolerance of the quadrature oracles.
pub const QUADRATURE_TOL: f64 = 1e-10;
const NEGATIVE_VARIANCE_SLACK: f64 = 1e-10;
/// Largest tolerated `(|a| + |b|) / |a + b|` in the two-term second moment.
const CANCELLATION_LIMIT: f64 = 1e3;

/// Printed decimal constants of the variance formula next to the exact
/// values used in the evaluation.
pub const VARIANCE_CONSTANTS: [(f64, f64); 3] = [(0.56419, 0.564_189_583_547_756_3), (0.4, 0.4), (0.28571, 2.0 / 7.0)];

/// Parameters for index `i` (zero-based) of `sigma` after `k` power steps.
///
/// `sigma` does not need to be sorted. The weights are `βₗ = (σₗ/σ_max)^{4k}`,
/// which leaves `αᵢ` and `γᵢ` identical to the unscaled `σₗ^{4k}`.
pub fn analytic_params(sigma: &[f64], i: usize, k: u32) -> Result<AnalyticParams, AnalysisError> {
    if sigma.len() < 2 {
        return Err(AnalysisError::InvalidInput("need at least two singular values".into()));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(AnalysisError::InvalidInput(
            "singular values must be finite and non-negative".into(),
        ));
    }
    if i >= sigma.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "index {i} out of range for {} values",
            sigma.len()
        )));
    }
    if !(sigma[i] > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("sigma[{i}] must be positive")));
    }
    let exponent =
        i32::try_from(4 * u64::from(k)).map_err(|_| AnalysisError::InvalidInput(format!("k = {k} is too large")))?;
    let max = sigma.iter().copied().fold(0.0, f64::max);
    let beta = sigma.iter().map(|s| (s / max).powi(exponent)).collect();
    Ok(AnalyticParams::from_betas(beta, i, k)?)
}

/// `λᵢ = γ^{1/2} Γ(3/2)Γ(½+α) / (Γ(½)Γ(3/2+α)) · ₂F₁(3/2, ½+α; 3/2+α; 1-γ)`.
pub fn lambda_analytic(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    let (a, g) = (p.alpha(), p.gamma());
    let ln_pref = 0.5 * g.ln() + log_gamma(1.5)? + log_gamma(0.5 + a)? - log_gamma(0.5)? - log_gamma(1.5 + a)?;
    let f = gauss_2f1_complement(1.5, 0.5 + a, 1.5 + a, g)?;
    Ok(ln_pref.exp() * f)
}

/// `ωᵢ² = E[z²] - λᵢ²` with
///
/// `E[z²] = (1/√π) γ^{1/2} Γ(½+α)/Γ(α) · ( (2/5) F(5/2, 1-α; 7/2; 1) F(5/2, 3/2+α; 5/2+α; 1-γ)
///          + (2/7)(γ-1) F(7/2, 1-α; 9/2; 1) F(7/2, 3/2+α; 7/2+α; 1-γ) )`.
///
/// The unit-argument factors use Gauss's summation (their `c - a - b = α > 0`).
/// When the two terms cancel to fewer than about 13 significant digits the
/// single-sum Euler form of `E[z²]` is evaluated instead.
pub fn variance_analytic(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    let lambda = lambda_analytic(p)?;
    let v = second_moment_analytic(p)? - lambda * lambda;
    if v < -NEGATIVE_VARIANCE_SLACK {
        return Err(AnalysisError::NegativeVariance(v));
    }
    Ok(v.max(0.0))
}

fn second_moment_analytic(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    let (a, g) = (p.alpha(), p.gamma());
    let [(_, inv_sqrt_pi), (_, two_fifths), (_, two_sevenths)] = VARIANCE_CONSTANTS;
    let pref = inv_sqrt_pi * (0.5 * g.ln() + log_gamma(0.5 + a)? - log_gamma(a)?).exp();
    let first =
        two_fifths * gauss_2f1_complement(2.5, 1.0 - a, 3.5, 0.0)? * gauss_2f1_complement(2.5, 1.5 + a, 2.5 + a, g)?;
    let second = two_sevenths
        * (g - 1.0)
        * gauss_2f1_complement(3.5, 1.0 - a, 4.5, 0.0)?
        * gauss_2f1_complement(3.5, 1.5 + a, 3.5 + a, g)?;
    let total = first + second;
    if first.abs() + second.abs() <= CANCELLATION_LIMIT * total.abs() {
        return Ok(pref * total);
    }
    raw_moment_euler(p, 2)
}

/// `E[zᵐ] = B(α, m+½)/B(½, α) · ₂F₁(m, α; α+m+½; 1-γ)`, a single
/// positive-term form used when the two-term expression cancels.
fn raw_moment_euler(p: &AnalyticParams, m: u32) -> Result<f64, AnalysisError> {
    let (a, g) = (p.alpha(), p.gamma());
    let m = f64::from(m);
    let ln_ratio = log_gamma(m + 0.5)? + log_gamma(a + 0.5)? - log_gamma(a + m + 0.5)? - log_gamma(0.5)?;
    Ok(ln_ratio.exp() * gauss_2f1_complement(m, a, a + m + 0.5, g)?)
}

/// `∫₀¹ z^m x•(z) dz` split at ½, with each half integrated from its outer
/// endpoint so both `z` and `1 - z` stay exact near the singular ends.
///
/// For large `γ` the mass of `z` sits near `1/(γ(2α+1))` and for small `γ`
/// the mass of `1 - z` sits near `γ(2α+1)`; each half is cut geometrically
/// down to that scale so the adaptive rule cannot step over it.
fn raw_moment_quadrature(p: &AnalyticParams, m: i32) -> Result<f64, AnalysisError> {
    // Near z = 1 the density behaves like (1 - z)^(α - 1).
    let power = (1.0 / p.alpha()).ceil().clamp(2.0, 32.0) as u32;
    let spread = 2.0 * p.alpha() + 1.0;
    let lower_cuts = breakpoints(1.0 / (p.gamma() * spread));
    let upper_cuts = breakpoints(p.gamma() * spread);
    let tol = QUADRATURE_TOL / (lower_cuts.len() + upper_cuts.len()) as f64;
    let failed = std::cell::Cell::new(None);
    let eval = |z: f64, one_minus_z: f64, weight: f64| match pdf_x_bullet_split(z, one_minus_z, p) {
        Ok(v) => weight * v,
        Err(e) => {
            failed.set(Some(e));
            f64::NAN
        }
    };
    let mut total = 0.0;
    for w in lower_cuts.windows(2) {
        total += integrate_with_power(|z| eval(z, 1.0 - z, z.powi(m)), w[0], w[1], tol, power)?;
    }
    for w in upper_cuts.windows(2) {
        total += integrate_with_power(|t| eval(1.0 - t, t, (1.0 - t).powi(m)), w[0], w[1], tol, power)?;
    }
    if let Some(e) = failed.take() {
        return Err(e.into());
    }
    Ok(total)
}

/// `0, …, ½` with geometric cuts from ½ down past `scale / 64`.
fn breakpoints(scale: f64) -> Vec<f64> {
    let mut cuts = vec![0.5];
    let floor = (scale / 64.0).max(f64::MIN_POSITIVE);
    while cuts.len() < 400 && *cuts.last().expect("non-empty") > floor && scale < 0.5 {
        let next = cuts.last().expect("non-empty") / 8.0;
        cuts.push(next);
    }
    cuts.push(0.0);
    cuts.reverse();
    cuts
}

/// `∫₀¹ z x•(z) dz` by adaptive quadrature.
pub fn lambda_quadrature(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    raw_moment_quadrature(p, 1)
}

/// `∫₀¹ z² x•(z) dz - (∫₀¹ z x•(z) dz)²` by adaptive quadrature.
pub fn variance_quadrature(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    let lambda = raw_moment_quadrature(p, 1)?;
    Ok(raw_moment_quadrature(p, 2)? - lambda * lambda)
}

/// `∫₀¹ x•(z) dz`, which should be 1.
pub fn density_mass(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    raw_moment_quadrature(p, 0)
}
