//! Spectrum-rebalancing operators built on the Gram square roots
//! `A = (HᵀH)^{1/2}` and `B = (HᵀH)^{-1/2}`.
//!
//! Each has the form `H̃ = H B C` where `C` applies a push-forward function
//! to the spectrum of `A`. Since `H B = U Vᵀ`, the singular values of `H̃`
//! are the push-forward of the singular values of `H`.

use crate::linalg::{randomized_svd, svd_jacobi, FeatureMap, Matrix, RngStream};

use super::{newton_schulz, AugmentSpec, OpsError, PowerNormVariant, SvdMode};

const INVERSE_RESIDUAL_LIMIT: f64 = 1e-4;
const RSVD_OVERSAMPLE: usize = 5;
const RSVD_POWER_ITERS: usize = 2;

#[derive(Debug, Clone)]
pub struct GramRoots {
    /// `A = (HᵀH)^{1/2}`.
    pub sqrt: Matrix,
    /// `B = (HᵀH)^{-1/2}`.
    pub inv_sqrt: Matrix,
    /// Newton-Schulz residual `‖AA - HᵀH‖_F / ‖HᵀH‖_F`.
    pub residual: f64,
    /// `‖AB - I‖_F`.
    pub inverse_residual: f64,
}

/// Gram square roots by Newton-Schulz, failing when `HᵀH` is singular or too
/// ill-conditioned for `zeta` iterations to produce a usable inverse root.
pub fn gram_roots(h: &FeatureMap, zeta: u32) -> Result<GramRoots, OpsError> {
    let ns = newton_schulz(&h.gram(), zeta)?;
    let d = h.cols();
    let inverse_residual = ns
        .sqrt
        .matmul(&ns.inv_sqrt)?
        .sub(&Matrix::identity(d))?
        .frobenius_norm();
    if !(inverse_residual <= INVERSE_RESIDUAL_LIMIT * (d as f64).sqrt()) {
        return Err(OpsError::IllConditioned { inverse_residual });
    }
    Ok(GramRoots {
        sqrt: ns.sqrt,
        inv_sqrt: ns.inv_sqrt,
        residual: ns.residual,
        inverse_residual,
    })
}

fn wrong_spec(expected: &str, got: &AugmentSpec) -> OpsError {
    OpsError::InvalidSpec(format!("expected a {expected} spec, got {}", got.name()))
}

#[derive(Debug, Clone)]
pub struct MaxExpOutput {
    pub augmented: FeatureMap,
    pub roots: GramRoots,
    /// The integer exponent actually applied.
    pub exponent: u32,
}

/// `η + Δη` rounded half away from zero, clamped to at least 1.
pub fn maxexp_exponent(eta_total: f64) -> u32 {
    let r = eta_total.round();
    if r < 1.0 || r.is_nan() {
        1
    } else if r >= u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// MaxExp(F): `H̃ = H B (I - (I - A/Tr A)^e)` with `e` from
/// [`maxexp_exponent`] and one draw `Δη ~ noise_scale·N(0, 1)`.
pub fn maxexp_f(h: &FeatureMap, spec: &AugmentSpec, stream: RngStream) -> Result<MaxExpOutput, OpsError> {
    let AugmentSpec::MaxExpF {
        eta,
        noise_scale,
        ns_iters,
    } = *spec
    else {
        return Err(wrong_spec("max_exp_f", spec));
    };
    spec.validate()?;
    let delta = noise_scale * stream.sampler().normal();
    let exponent = maxexp_exponent(eta + delta);

    let roots = gram_roots(h, ns_iters)?;
    let d = h.cols();
    let a = &roots.sqrt;
    let base = Matrix::identity(d).sub(&a.scale(1.0 / a.trace()))?;
    let c = Matrix::identity(d).sub(&base.pow(exponent)?)?;
    let augmented = h.matmul(&roots.inv_sqrt)?.matmul(&c)?;
    Ok(MaxExpOutput {
        augmented,
        roots,
        exponent,
    })
}

#[derive(Debug, Clone)]
pub struct PowerNormOutput {
    pub augmented: FeatureMap,
    pub roots: GramRoots,
    /// The mixing weight `β + Δβ` after clamping.
    pub beta: f64,
}

/// Power Norm: `H̃ = H B ((1-β̃) A^{0.5} + β̃ A^{0.5} A^{0.25})` with one draw
/// `Δβ ~ noise_scale·N(0, 1)`.
///
/// The plain variant clamps `β̃ = β + Δβ` to `[0, 1]`; the star variant
/// clamps `Δβ` to `[-1, 1]` and leaves `β + Δβ` otherwise free.
pub fn power_norm(h: &FeatureMap, spec: &AugmentSpec, stream: RngStream) -> Result<PowerNormOutput, OpsError> {
    let AugmentSpec::PowerNorm {
        beta,
        noise_scale,
        variant,
        ns_iters,
    } = *spec
    else {
        return Err(wrong_spec("power_norm", spec));
    };
    spec.validate()?;
    let delta = noise_scale * stream.sampler().normal();
    let beta_eff = match variant {
        PowerNormVariant::Plain => (beta + delta).clamp(0.0, 1.0),
        PowerNormVariant::Star => beta + delta.clamp(-1.0, 1.0),
    };

    let roots = gram_roots(h, ns_iters)?;
    let a_half = newton_schulz(&roots.sqrt, ns_iters)?.sqrt;
    let a_quarter = newton_schulz(&a_half, ns_iters)?.sqrt;
    let mut c = a_half
        .scale(1.0 - beta_eff)
        .add(&a_half.matmul(&a_quarter)?.scale(beta_eff))?;
    c.symmetrize();
    let augmented = h.matmul(&roots.inv_sqrt)?.matmul(&c)?;
    Ok(PowerNormOutput {
        augmented,
        roots,
        beta: beta_eff,
    })
}

#[derive(Debug, Clone)]
pub struct GrassmanOutput {
    pub augmented: FeatureMap,
    pub roots: GramRoots,
    /// The `kappa` flattened levels `max(1 + Δκᵢ, 0)`.
    pub levels: Vec<f64>,
}

/// Grassman flattening: `H̃ = H B V Flat(Λ; κ) Vᵀ`, where `Flat` sets the `κ`
/// leading singular values to `max(1 + Δκᵢ, 0)` and the rest to 0.
///
/// The `κ` draws `Δκᵢ ~ noise_scale·N(0, 1)` are taken first from `stream`;
/// the randomized SVD mode sketches with `stream.substream(1)`.
pub fn grassman_flat(h: &FeatureMap, spec: &AugmentSpec, stream: RngStream) -> Result<GrassmanOutput, OpsError> {
    let AugmentSpec::Grassman {
        kappa,
        noise_scale,
        svd_mode,
        ns_iters,
    } = *spec
    else {
        return Err(wrong_spec("grassman", spec));
    };
    spec.validate()?;
    let d = h.cols();
    if kappa > d {
        return Err(OpsError::InvalidSpec(format!(
            "kappa = {kappa} exceeds the feature dimension {d}"
        )));
    }
    let mut g = stream.sampler();
    let levels: Vec<f64> = (0..kappa).map(|_| (1.0 + noise_scale * g.normal()).max(0.0)).collect();

    let roots = gram_roots(h, ns_iters)?;
    let v = match svd_mode {
        SvdMode::Exact => svd_jacobi(&roots.sqrt)?.v,
        SvdMode::Randomized => {
            randomized_svd(
                &roots.sqrt,
                kappa,
                RSVD_OVERSAMPLE,
                RSVD_POWER_ITERS,
                stream.substream(1),
            )?
            .v
        }
    };
    let flat = Matrix::from_fn(d, d, |i, j| {
        (0..kappa).map(|l| v.get(i, l) * levels[l] * v.get(j, l)).sum()
    });
    let augmented = h.matmul(&roots.inv_sqrt)?.matmul(&flat)?;
    Ok(GrassmanOutput {
        augmented,
        roots,
        levels,
    })
}
