//! Push-forward profiles `φ(σ₁; k) = σ₁(1 - λ₁(k))` over a grid of leading
//! singular values with a fixed tail.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, format_f64, orthonormalize, FeatureMap, Matrix, RngStream, Spectrum};
use crate::ops::{maxexp_exponent, sfa_from_init};

use super::monte_carlo::{chunked_moments, coefficient, power_weights, Moments};
use super::{analytic_params, lambda_analytic, variance_analytic, AnalysisError};

/// Rows of the synthetic feature map built in matrix mode.
pub const MATRIX_ROWS: usize = 64;
/// Sub-stream reserved for the random left basis of matrix mode; grid point
/// `j` draws its trials from `stream.substream(j)`.
pub const BASIS_SUBSTREAM: u64 = u64::MAX;

pub const PROFILE_CSV_HEADER: &str = "sigma,k,emp_mean,emp_std,analytic_mean,analytic_std,trials";
pub const MAXEXP_CSV_HEADER: &str = "sigma,sigma_normalized,exponent,pushforward,unnormalized_pushforward";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Sample `λ′₁` directly from Gaussian coefficients.
    Synthetic,
    /// Build `H = U diag(σ)` with a random orthonormal `U`, run SFA and read
    /// `u₁ᵀ H̃ e₁`. The right basis is the identity because the start vector
    /// is isotropic, which also keeps `σ₁ = 0` exactly at zero.
    #[default]
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushForwardProfile {
    pub sigma_grid: Vec<f64>,
    pub k: u32,
    pub fixed_tail: Vec<f64>,
    pub mean: Vec<f64>,
    /// Per-draw standard deviation of `φ′`.
    pub std: Vec<f64>,
    pub mean_std_error: Vec<f64>,
    pub std_std_error: Vec<f64>,
    pub analytic_mean: Vec<f64>,
    pub analytic_std: Vec<f64>,
    pub trials: u64,
    pub mode: ProfileMode,
}

impl PushForwardProfile {
    /// Position of `sigma` in the grid (exact match up to 1e-12).
    pub fn index_of(&self, sigma: f64) -> Option<usize> {
        self.sigma_grid.iter().position(|s| (s - sigma).abs() <= 1e-12)
    }

    /// Profile CSV with a header line and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(PROFILE_CSV_HEADER);
        out.push('\n');
        for j in 0..self.sigma_grid.len() {
            let fields = [
                format_f64(self.sigma_grid[j]),
                self.k.to_string(),
                format_f64(self.mean[j]),
                format_f64(self.std[j]),
                format_f64(self.analytic_mean[j]),
                format_f64(self.analytic_std[j]),
                self.trials.to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Analytic `(φ, σ·ω)` for index `i` of `sigma` after `k` steps; both are 0
/// when `σᵢ = 0`.
pub fn phi_analytic(sigma: &[f64], i: usize, k: u32) -> Result<(f64, f64), AnalysisError> {
    let s = *sigma
        .get(i)
        .ok_or_else(|| AnalysisError::InvalidInput(format!("index {i} out of range for {} values", sigma.len())))?;
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    let p = analytic_params(sigma, i, k)?;
    Ok((s * (1.0 - lambda_analytic(&p)?), s * variance_analytic(&p)?.sqrt()))
}

/// Profile of `φ(σ₁; k)` for each `σ₁` in `sigma_grid` with the remaining
/// singular values fixed to `tail`.
pub fn push_forward_profile(
    tail: &Spectrum,
    sigma_grid: &[f64],
    k: u32,
    trials: u64,
    stream: RngStream,
    mode: ProfileMode,
) -> Result<PushForwardProfile, AnalysisError> {
    if sigma_grid.is_empty() {
        return Err(AnalysisError::InvalidInput("sigma grid is empty".into()));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(AnalysisError::InvalidInput(format!(
            "grid values must be finite and non-negative, got {s}"
        )));
    }
    if trials == 0 {
        return Err(AnalysisError::InvalidInput("trials must be at least 1".into()));
    }
    let d = tail.len() + 1;
    let basis = match mode {
        ProfileMode::Matrix => {
            let mut g = stream.substream(BASIS_SUBSTREAM).sampler();
            Some(orthonormalize(&g.matrix(MATRIX_ROWS.max(d), d))?)
        }
        ProfileMode::Synthetic => None,
    };

    let mut profile = PushForwardProfile {
        sigma_grid: sigma_grid.to_vec(),
        k,
        fixed_tail: tail.to_vec(),
        mean: Vec::with_capacity(sigma_grid.len()),
        std: Vec::with_capacity(sigma_grid.len()),
        mean_std_error: Vec::with_capacity(sigma_grid.len()),
        std_std_error: Vec::with_capacity(sigma_grid.len()),
        analytic_mean: Vec::with_capacity(sigma_grid.len()),
        analytic_std: Vec::with_capacity(sigma_grid.len()),
        trials,
        mode,
    };
    for (j, &s1) in sigma_grid.iter().enumerate() {
        let mut sigma = Vec::with_capacity(d);
        sigma.push(s1);
        sigma.extend_from_slice(tail);
        let point_stream = stream.substream(j as u64);
        let m = match &basis {
            None => synthetic_moments(&sigma, k, trials, point_stream)?,
            Some(u) => matrix_moments(&sigma, u, k, trials, point_stream)?,
        };
        let (am, astd) = phi_analytic(&sigma, 0, k)?;
        profile.mean.push(m.mean);
        profile.std.push(m.std_dev());
        profile.mean_std_error.push(m.std_error());
        profile.std_std_error.push(m.std_dev_std_error());
        profile.analytic_mean.push(am);
        profile.analytic_std.push(astd);
    }
    Ok(profile)
}

/// MaxExp(F) push-forward of `σ₁` over a grid with a fixed tail, on both the
/// raw axis `σ₁` and the normalized axis `σ₁ / Tr A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxExpProfile {
    pub sigma_grid: Vec<f64>,
    pub fixed_tail: Vec<f64>,
    /// Integer exponent from [`maxexp_exponent`].
    pub exponent: u32,
    /// `σ₁ / Tr A` with `Tr A = σ₁ + Σ tail`.
    pub normalized: Vec<f64>,
    /// `1 - (1 - σ₁/Tr A)^e`, the output singular value of the operator.
    pub pushforward: Vec<f64>,
    /// `1 - (1 - σ₁)^e`, the curve without trace normalization.
    pub unnormalized: Vec<f64>,
}

impl MaxExpProfile {
    /// CSV with [`MAXEXP_CSV_HEADER`] and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MAXEXP_CSV_HEADER);
        out.push('\n');
        for j in 0..self.sigma_grid.len() {
            let fields = [
                format_f64(self.sigma_grid[j]),
                format_f64(self.normalized[j]),
                self.exponent.to_string(),
                format_f64(self.pushforward[j]),
                format_f64(self.unnormalized[j]),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Noise-free MaxExp(F) profile for exponent `eta` (rounded as the operator
/// rounds it).
pub fn maxexp_profile(tail: &Spectrum, sigma_grid: &[f64], eta: f64) -> Result<MaxExpProfile, AnalysisError> {
    if sigma_grid.is_empty() {
        return Err(AnalysisError::InvalidInput("sigma grid is empty".into()));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(AnalysisError::InvalidInput(format!(
            "grid values must be finite and non-negative, got {s}"
        )));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let exponent = maxexp_exponent(eta);
    let tail_sum: f64 = tail.iter().sum();
    let curve = |x: f64| 1.0 - (1.0 - x).powi(exponent.min(i32::MAX as u32) as i32);
    let normalized: Vec<f64> = sigma_grid
        .iter()
        .map(|&s| if s == 0.0 { 0.0 } else { s / (s + tail_sum) })
        .collect();
    Ok(MaxExpProfile {
        sigma_grid: sigma_grid.to_vec(),
        fixed_tail: tail.to_vec(),
        exponent,
        pushforward: normalized.iter().map(|&x| curve(x)).collect(),
        unnormalized: sigma_grid.iter().map(|&s| curve(s)).collect(),
        normalized,
    })
}

fn synthetic_moments(sigma: &[f64], k: u32, trials: u64, stream: RngStream) -> Result<Moments, AnalysisError> {
    let s1 = sigma[0];
    if sigma.iter().all(|s| *s == 0.0) {
        return Ok(Moments::constant(0.0, trials));
    }
    let weights = power_weights(sigma, 0, k)?;
    Ok(chunked_moments(trials, stream, |s, len, m| {
        let mut g = s.sampler();
        let mut y = vec![0.0; weights.len()];
        for _ in 0..len {
            g.fill(&mut y);
            m.push(s1 * (1.0 - coefficient(&weights, &y, 0)));
        }
    }))
}

fn matrix_moments(sigma: &[f64], u: &Matrix, k: u32, trials: u64, stream: RngStream) -> Result<Moments, AnalysisError> {
    let h: FeatureMap = u.matmul(&Matrix::from_diag(sigma))?;
    let u1 = u.col(0);
    let d = sigma.len();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let failure = std::sync::Mutex::new(None);
    let moments = chunked_moments(trials, stream, |s, len, m| {
        let mut g = s.sampler();
        for _ in 0..len {
            let r0 = g.vector(d);
            match sfa_from_init(&h, k, &r0).and_then(|out| Ok(out.augmented.matvec(&e1)?)) {
                Ok(hv) => m.push(dot(&u1, &hv)),
                Err(e) => {
                    *failure.lock().expect("lock") = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e.into());
    }
    Ok(moments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd_jacobi;
    use crate::ops::{maxexp_f, AugmentSpec};

    fn tail() -> Spectrum {
        Spectrum::new(vec![1.5, 0.9, 0.2, 0.01]).unwrap()
    }

    #[test]
    fn zero_sigma_maps_to_zero() {
        for mode in [ProfileMode::Synthetic, ProfileMode::Matrix] {
            let p = push_forward_profile(&tail(), &[0.0], 2, 500, RngStream::new(1, 0), mode).unwrap();
            assert_eq!((p.analytic_mean[0], p.analytic_std[0]), (0.0, 0.0));
            assert_eq!((p.mean[0], p.std[0]), (0.0, 0.0));
        }
    }

    #[test]
    fn modes_agree_statistically() {
        let grid = [0.5, 2.0];
        let a = push_forward_profile(&tail(), &grid, 1, 40_000, RngStream::new(3, 0), ProfileMode::Synthetic).unwrap();
        let b = push_forward_profile(&tail(), &grid, 1, 40_000, RngStream::new(4, 0), ProfileMode::Matrix).unwrap();
        for j in 0..grid.len() {
            let se = a.mean_std_error[j].hypot(b.mean_std_error[j]);
            assert!(
                (a.mean[j] - b.mean[j]).abs() <= 4.0 * se,
                "{} vs {}",
                a.mean[j],
                b.mean[j]
            );
        }
    }

    #[test]
    fn fig3_point_near_point_eight() {
        let p = push_forward_profile(&tail(), &[2.0], 1, 20_000, RngStream::new(5, 0), ProfileMode::Matrix).unwrap();
        assert!((0.7..=0.9).contains(&p.mean[0]), "{}", p.mean[0]);
        assert!((0.7..=0.9).contains(&p.analytic_mean[0]), "{}", p.analytic_mean[0]);
    }

    #[test]
    fn csv_layout() {
        let p = push_forward_profile(
            &tail(),
            &[0.0, 1.0],
            1,
            100,
            RngStream::new(6, 0),
            ProfileMode::Synthetic,
        )
        .unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROFILE_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let zero = format_f64(0.0);
        let want = [zero.as_str(), "1", &zero, &zero, &zero, &zero, "100"].join(",");
        assert_eq!(lines[1], want);
        assert_eq!(lines[2].split(',').count(), 7);
    }

    #[test]
    fn maxexp_profile_matches_operator_spectrum() {
        let grid = [0.0, 0.5, 2.0, 3.0];
        let prof = maxexp_profile(&tail(), &grid, 2.6).unwrap();
        assert_eq!(prof.exponent, 3);
        assert_eq!(
            (prof.normalized[0], prof.pushforward[0], prof.unnormalized[0]),
            (0.0, 0.0, 0.0)
        );
        assert!((prof.unnormalized[1] - 0.875).abs() < 1e-15);
        let spec = AugmentSpec::MaxExpF {
            eta: 2.6,
            noise_scale: 0.0,
            ns_iters: 30,
        };
        for (j, &s1) in grid.iter().enumerate().skip(1) {
            let mut sigma = vec![s1];
            sigma.extend_from_slice(&tail());
            let h = Matrix::from_diag(&sigma);
            let out = maxexp_f(&h, &spec, RngStream::new(0, 0)).unwrap();
            let got = svd_jacobi(&out.augmented).unwrap().sigma;
            let top = got.iter().copied().find(|v| (v - prof.pushforward[j]).abs() < 1e-8);
            assert!(top.is_some(), "sigma1 = {s1}: {got:?} lacks {}", prof.pushforward[j]);
        }
    }

    #[test]
    fn maxexp_profile_csv_shape() {
        let csv = maxexp_profile(&tail(), &[0.0, 1.0], 1.0).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], MAXEXP_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(maxexp_profile(&tail(), &[1.0], 0.0).is_err());
        assert!(maxexp_profile(&tail(), &[], 1.0).is_err());
    }
}
