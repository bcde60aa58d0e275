//! Spectral feature augmentation by incomplete power iteration.

use crate::linalg::{dot, norm2, FeatureMap, LinalgError, Matrix, RngStream};

use super::OpsError;

/// Draws tried (the stream itself, then sub-streams 1, 2, …) before giving
/// up on a vanishing power-iteration vector.
pub const MAX_DRAW_ATTEMPTS: u32 = 3;

// ‖r⁽ᵏ⁾‖ below this fraction of ‖H‖_F^{2k}·‖r⁽⁰⁾‖ counts as degenerate.
const DEGENERATE_REL: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct SfaOutput {
    /// `H̃ = H - H r̂ r̂ᵀ`.
    pub augmented: FeatureMap,
    /// `r⁽ᵏ⁾ = (HᵀH)ᵏ r⁽⁰⁾`.
    pub r_final: Vec<f64>,
    /// The Gaussian start vector `r⁽⁰⁾`.
    pub r_init: Vec<f64>,
    /// Index of the accepted draw, starting at 1.
    pub attempts: u32,
    /// Standard-normal draws consumed over all attempts.
    pub draws: u64,
}

impl SfaOutput {
    /// Unit vector `r̂ = r⁽ᵏ⁾ / ‖r⁽ᵏ⁾‖₂` (zero if `r⁽ᵏ⁾` is).
    pub fn direction(&self) -> Vec<f64> {
        unit(&self.r_final)
    }
}

fn unit(r: &[f64]) -> Vec<f64> {
    let n = norm2(r);
    if n == 0.0 {
        return vec![0.0; r.len()];
    }
    r.iter().map(|x| x / n).collect()
}

/// `H̃ = H (I - r̂ r̂ᵀ)` with `r⁽⁰⁾ ~ N(0, I)` drawn from `stream` and
/// `r⁽ⁱ⁾ = HᵀH r⁽ⁱ⁻¹⁾` iterated `k` times.
///
/// If `r⁽ᵏ⁾` vanishes numerically, `r⁽⁰⁾` is redrawn from
/// `stream.substream(1)`, then `stream.substream(2)`. A zero `H` is returned
/// unchanged.
pub fn sfa_forward(h: &FeatureMap, k: u32, stream: RngStream) -> Result<SfaOutput, OpsError> {
    let d = h.cols();
    let mut draws = 0;
    for attempt in 0..MAX_DRAW_ATTEMPTS {
        let s = if attempt == 0 {
            stream
        } else {
            stream.substream(attempt as u64)
        };
        let r0 = s.sampler().vector(d);
        draws += d as u64;
        match sfa_from_init(h, k, &r0) {
            Ok(mut out) => {
                out.attempts = attempt + 1;
                out.draws = draws;
                return Ok(out);
            }
            Err(OpsError::DegenerateDraw { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(OpsError::DegenerateDraw {
        attempts: MAX_DRAW_ATTEMPTS,
    })
}

/// [`sfa_forward`] from a caller-supplied `r⁽⁰⁾`.
pub fn sfa_from_init(h: &FeatureMap, k: u32, r0: &[f64]) -> Result<SfaOutput, OpsError> {
    if r0.len() != h.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "sfa",
            left: h.shape(),
            right: (r0.len(), 1),
        }
        .into());
    }
    let fro = h.frobenius_norm();
    if fro == 0.0 {
        return Ok(SfaOutput {
            augmented: h.clone(),
            r_final: vec![0.0; h.cols()],
            r_init: r0.to_vec(),
            attempts: 1,
            draws: 0,
        });
    }
    let r = power_iterate(h, k, r0)?;
    if is_degenerate(&r, r0, fro, k) {
        return Err(OpsError::DegenerateDraw { attempts: 1 });
    }
    let rhat = unit(&r);
    let hr = h.matvec(&rhat)?;
    let augmented = h.rank_one_update(&hr, &rhat, -1.0);
    Ok(SfaOutput {
        augmented,
        r_final: r,
        r_init: r0.to_vec(),
        attempts: 1,
        draws: 0,
    })
}

fn power_iterate(h: &Matrix, k: u32, r0: &[f64]) -> Result<Vec<f64>, OpsError> {
    let mut r = r0.to_vec();
    for _ in 0..k {
        r = h.t_matvec(&h.matvec(&r)?)?;
    }
    if r.iter().all(|x| x.is_finite()) {
        Ok(r)
    } else {
        Err(LinalgError::Overflow { op: "power iteration" }.into())
    }
}

fn is_degenerate(r: &[f64], r0: &[f64], fro: f64, k: u32) -> bool {
    let n = norm2(r);
    if n == 0.0 {
        return true;
    }
    let scale_ln = 2.0 * k as f64 * fro.ln() + norm2(r0).ln();
    n.ln() < DEGENERATE_REL.ln() + scale_ln
}

/// `|‖H̃‖_F² + ‖H r̂‖² - ‖H‖_F²| / ‖H‖_F²`, zero for a zero `H`.
pub fn conservation_residual(h: &FeatureMap, out: &SfaOutput) -> f64 {
    let total = h.frobenius_norm().powi(2);
    if total == 0.0 {
        return 0.0;
    }
    let hr = h.matvec(&out.direction()).expect("shapes checked by sfa");
    let removed = dot(&hr, &hr);
    let kept = out.augmented.frobenius_norm().powi(2);
    (kept + removed - total).abs() / total
}

/// The `k = 1` operator written out as
/// `H (I - HᵀH r⁽⁰⁾ r⁽⁰⁾ᵀ HᵀH / ‖HᵀH r⁽⁰⁾‖²)`.
pub fn sfa_closed_form_k1(h: &FeatureMap, r0: &[f64]) -> Result<FeatureMap, OpsError> {
    let g = h.gram().matvec(r0)?;
    let gg = dot(&g, &g);
    if gg == 0.0 {
        return Err(OpsError::DegenerateDraw { attempts: 1 });
    }
    let d = h.cols();
    let projector = Matrix::from_fn(d, d, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - g[i] * g[j] / gg
    });
    Ok(h.matmul(&projector)?)
}

/// Gradient of `⟨G, H̃(H; r⁽⁰⁾)⟩` with respect to `H` for the `k = 1`
/// operator, holding `r⁽⁰⁾` fixed.
///
/// With `r = HᵀH r⁽⁰⁾`, `s = rᵀr`, `M = HᵀG` and `T = rᵀMr / s`:
/// `∇ = G - (G r) rᵀ/s - (H r⁽⁰⁾) cᵀ - (H c) r⁽⁰⁾ᵀ`, where
/// `c = (M + Mᵀ) r / s - 2T r / s`.
pub fn sfa_backward(h: &FeatureMap, r0: &[f64], grad_out: &FeatureMap) -> Result<FeatureMap, OpsError> {
    if grad_out.shape() != h.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "sfa_backward",
            left: h.shape(),
            right: grad_out.shape(),
        }
        .into());
    }
    let h_r0 = h.matvec(r0)?;
    let r = h.t_matvec(&h_r0)?;
    let s = dot(&r, &r);
    if s == 0.0 || !s.is_finite() {
        return Err(OpsError::DegenerateDraw { attempts: 1 });
    }
    let g_r = grad_out.matvec(&r)?;
    let h_r = h.matvec(&r)?;
    let m_r = h.t_matvec(&g_r)?;
    let mt_r = grad_out.t_matvec(&h_r)?;
    let t = dot(&r, &m_r) / s;
    let c: Vec<f64> = (0..r.len())
        .map(|j| (m_r[j] + mt_r[j]) / s - 2.0 * t * r[j] / s)
        .collect();
    let h_c = h.matvec(&c)?;
    let grad = grad_out
        .rank_one_update(&g_r, &r, -1.0 / s)
        .rank_one_update(&h_r0, &c, -1.0)
        .rank_one_update(&h_c, r0, -1.0);
    Ok(grad)
}
