use super::{ln_beta, SpecialError};

/// Beta(a, b) density at `x ∈ (0, 1)`.
pub fn beta_pdf(x: f64, a: f64, b: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(SpecialError::Domain {
            func: "beta_pdf",
            detail: format!("x must lie in (0, 1), got {x}"),
        });
    }
    Ok(beta_ln_pdf(x, 1.0 - x, a, b)?.exp())
}

/// Log of the Beta(a, b) density, taking `x` and `1 - x` separately so that
/// callers holding an accurate complement do not lose it to cancellation.
pub fn beta_ln_pdf(x: f64, one_minus_x: f64, a: f64, b: f64) -> Result<f64, SpecialError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(SpecialError::Domain {
            func: "beta_pdf",
            detail: format!("shape parameters must be positive and finite, got ({a}, {b})"),
        });
    }
    if !(x > 0.0 && one_minus_x > 0.0) || x > 1.0 || one_minus_x > 1.0 {
        return Err(SpecialError::Domain {
            func: "beta_pdf",
            detail: format!("x must lie in (0, 1), got x = {x}, 1 - x = {one_minus_x}"),
        });
    }
    Ok((a - 1.0) * x.ln() + (b - 1.0) * one_minus_x.ln() - ln_beta(a, b)?)
}
