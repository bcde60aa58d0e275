use std::f64::consts::PI;

use super::SpecialError;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// Stirling series coefficients B_{2k} / (2k (2k-1)).
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// Below this the argument is shifted up by the recurrence before the
// asymptotic series is applied; the first omitted term is ~2e-18 at 10.
const STIRLING_MIN: f64 = 10.0;

/// Natural log of `Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::Domain {
            func: "log_gamma",
            detail: format!("argument must be positive and finite, got {x}"),
        });
    }
    Ok(ln_gamma_positive(x))
}

fn ln_gamma_positive(x: f64) -> f64 {
    if x >= STIRLING_MIN {
        return stirling(x);
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < STIRLING_MIN {
        prod *= shifted;
        shifted += 1.0;
    }
    stirling(shifted) - prod.ln()
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

pub(crate) fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `sin(πx)` with exact zeros at the integers and full relative accuracy
/// near them.
fn sin_pi(x: f64) -> f64 {
    // r ∈ [-1, 1] and x - r is an even integer, so sin(πx) = sin(πr).
    let r = x - 2.0 * (0.5 * x).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `(sign, ln|Γ(x)|)` for any real `x` off the poles.
pub fn gamma_sign_ln(x: f64) -> Result<(f64, f64), SpecialError> {
    if !x.is_finite() {
        return Err(SpecialError::Domain {
            func: "gamma",
            detail: format!("non-finite argument {x}"),
        });
    }
    if x > 0.0 {
        return Ok((1.0, ln_gamma_positive(x)));
    }
    if is_nonpositive_integer(x) {
        return Err(SpecialError::Pole(x));
    }
    // Reflection: Γ(x) Γ(1-x) = π / sin(πx).
    let s = sin_pi(x);
    let ln_abs = PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x);
    Ok((s.signum(), ln_abs))
}

pub fn gamma(x: f64) -> Result<f64, SpecialError> {
    let (s, l) = gamma_sign_ln(x)?;
    Ok(s * l.exp())
}

/// `1/Γ(x)`, zero at the poles.
pub fn reciprocal_gamma(x: f64) -> f64 {
    match gamma_sign_ln(x) {
        Ok((s, l)) => s * (-l).exp(),
        Err(_) => 0.0,
    }
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64, SpecialError> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}
