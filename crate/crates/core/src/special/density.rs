use serde::{Deserialize, Serialize};

use super::{beta_ln_pdf, SpecialError};

/// Shape parameters of the rebalanced-spectrum density for one index `i`.
///
/// `beta` holds the weights `βₗ = σₗ^{4k}` (rescaled by the largest one,
/// which leaves `alpha` and `gamma` unchanged), and
///
/// - `alpha = ½ (Σ_{l≠i} βₗ)² / Σ_{l≠i} βₗ²`
/// - `gamma = Σ_{l≠i} βₗ² / (βᵢ Σ_{l≠i} βₗ)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    beta: Vec<f64>,
    alpha: f64,
    gamma: f64,
    index: usize,
    k: u32,
}

impl AnalyticParams {
    /// Build from the weights `βₗ` for the zero-based index `index`.
    pub fn from_betas(beta: Vec<f64>, index: usize, k: u32) -> Result<Self, SpecialError> {
        let invalid = |detail: String| SpecialError::Domain {
            func: "analytic_params",
            detail,
        };
        if index >= beta.len() {
            return Err(invalid(format!(
                "index {index} out of range for {} weights",
                beta.len()
            )));
        }
        if beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(invalid("weights must be finite and non-negative".into()));
        }
        let bi = beta[index];
        if !(bi > 0.0) {
            return Err(invalid(format!("weight at index {index} must be positive")));
        }
        let (sum, sum_sq) = beta
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != index)
            .fold((0.0, 0.0), |(s, q), (_, &b)| (s + b, q + b * b));
        if !(sum > 0.0 && sum_sq > 0.0) {
            return Err(invalid("all weights other than the selected one vanish".into()));
        }
        let alpha = 0.5 * sum * sum / sum_sq;
        let gamma = (sum_sq / sum) / bi;
        if !(alpha > 0.0 && alpha.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!(
                "degenerate shape parameters alpha = {alpha}, gamma = {gamma}"
            )));
        }
        Ok(Self {
            beta,
            alpha,
            gamma,
            index,
            k,
        })
    }

    /// Parameters given directly by `(alpha, gamma)` with no underlying
    /// spectrum, for exploring the density family itself.
    pub fn from_shape(alpha: f64, gamma: f64) -> Result<Self, SpecialError> {
        if !(alpha > 0.0 && alpha.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(SpecialError::Domain {
                func: "analytic_params",
                detail: format!("alpha and gamma must be positive and finite, got ({alpha}, {gamma})"),
            });
        }
        Ok(Self {
            beta: Vec::new(),
            alpha,
            gamma,
            index: 0,
            k: 0,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

/// Density `x•(z)` of the rebalancing coefficient `z ∈ (0, 1)`:
/// `γ / d² · Beta(γz/d; ½, α)` with `d = 1 - (1-γ)z`.
pub fn pdf_x_bullet(z: f64, p: &AnalyticParams) -> Result<f64, SpecialError> {
    if !(z > 0.0 && z < 1.0) {
        return Err(SpecialError::Domain {
            func: "pdf_x_bullet",
            detail: format!("z must lie in (0, 1), got {z}"),
        });
    }
    pdf_x_bullet_split(z, 1.0 - z, p)
}

/// As [`pdf_x_bullet`] with `1 - z` passed explicitly, which keeps full
/// relative precision as `z` approaches 1.
pub fn pdf_x_bullet_split(z: f64, one_minus_z: f64, p: &AnalyticParams) -> Result<f64, SpecialError> {
    if !(z > 0.0 && one_minus_z > 0.0) || z > 1.0 || one_minus_z > 1.0 {
        return Err(SpecialError::Domain {
            func: "pdf_x_bullet",
            detail: format!("z must lie in (0, 1), got z = {z}, 1 - z = {one_minus_z}"),
        });
    }
    let g = p.gamma;
    let d = g * z + one_minus_z;
    if !(d > f64::MIN_POSITIVE) || !d.is_finite() {
        return Err(SpecialError::Underflow { gamma: g });
    }
    let x = g * z / d;
    let one_minus_x = one_minus_z / d;
    if !(x > 0.0 && one_minus_x > 0.0) {
        return Err(SpecialError::Underflow { gamma: g });
    }
    let ln = g.ln() - 2.0 * d.ln() + beta_ln_pdf(x, one_minus_x, 0.5, p.alpha)?;
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{beta_pdf, integrate_with_power};

    #[test]
    fn equal_weights() {
        let p = AnalyticParams::from_betas(vec![1.0; 5], 0, 1).unwrap();
        assert_eq!(p.alpha(), 2.0);
        assert_eq!(p.gamma(), 1.0);
    }

    #[test]
    fn unit_gamma_is_plain_beta() {
        let p = AnalyticParams::from_shape(2.7, 1.0).unwrap();
        for z in [1e-6, 0.1, 0.5, 0.93] {
            let a = pdf_x_bullet(z, &p).unwrap();
            let b = beta_pdf(z, 0.5, 2.7).unwrap();
            assert!(((a - b) / b).abs() < 1e-14);
        }
    }

    #[test]
    fn normalized() {
        let p = AnalyticParams::from_shape(1.7, 0.4).unwrap();
        let total = integrate_with_power(|z| pdf_x_bullet(z, &p).unwrap(), 0.0, 1.0, 1e-11, 2).unwrap();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(AnalyticParams::from_betas(vec![1.0, 0.0, 0.0], 0, 1).is_err());
        assert!(AnalyticParams::from_betas(vec![0.0, 1.0, 1.0], 0, 1).is_err());
        assert!(AnalyticParams::from_betas(vec![1.0, 1.0], 2, 1).is_err());
        assert!(AnalyticParams::from_betas(vec![1.0, -1.0, 1.0], 0, 1).is_err());
        assert!(AnalyticParams::from_shape(0.0, 1.0).is_err());
        assert!(pdf_x_bullet(0.0, &AnalyticParams::from_shape(1.0, 1.0).unwrap()).is_err());
    }
}
