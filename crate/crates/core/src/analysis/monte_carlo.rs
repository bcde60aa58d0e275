//! Direct sampling of the rebalancing coefficient
//! `λ′ᵢ(y, k) = (yᵢσᵢ^{2k})² / Σₗ (yₗσₗ^{2k})²` with `y ~ N(0, I)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::RngStream;

use super::AnalysisError;

/// Trials per parallel work unit; chunk `c` draws from `stream.substream(c)`.
pub const CHUNK_TRIALS: u64 = 4096;

/// Streaming central moments up to order four, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    /// `count` copies of `value`.
    pub fn constant(value: f64, count: u64) -> Moments {
        Moments {
            count,
            mean: if count == 0 { 0.0 } else { value },
            ..Moments::default()
        }
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Combine two disjoint samples (pairwise update formulas for central
    /// moment sums).
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let mean = self.mean + d * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 =
            self.m3 + other.m3 + d * d2 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        Moments {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Large-sample standard error of [`Moments::variance`],
    /// `√((μ₄ - σ⁴)/n)`.
    pub fn variance_std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mu4 = self.m4 / n;
        let s2 = self.m2 / n;
        ((mu4 - s2 * s2).max(0.0) / n).sqrt()
    }

    /// Large-sample standard error of [`Moments::std_dev`] by the delta method.
    pub fn std_dev_std_error(&self) -> f64 {
        let s = self.std_dev();
        if s == 0.0 {
            0.0
        } else {
            self.variance_std_error() / (2.0 * s)
        }
    }
}

/// Sample statistics of `λ′ᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    /// Per-draw standard deviation.
    pub std_dev: f64,
    pub std_dev_std_error: f64,
    pub trials: u64,
}

impl From<Moments> for McEstimate {
    fn from(m: Moments) -> Self {
        McEstimate {
            mean: m.mean,
            std_error: m.std_error(),
            variance: m.variance(),
            variance_std_error: m.variance_std_error(),
            std_dev: m.std_dev(),
            std_dev_std_error: m.std_dev_std_error(),
            trials: m.count,
        }
    }
}

/// Accumulate `f(chunk_stream, trials_in_chunk)` over fixed-size chunks in
/// parallel and merge the partial moments in chunk order, so the result
/// depends only on `stream` and `trials`.
pub fn chunked_moments<F>(trials: u64, stream: RngStream, f: F) -> Moments
where
    F: Fn(RngStream, u64, &mut Moments) + Sync,
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut m = Moments::default();
            f(stream.substream(c), len, &mut m);
            m
        })
        .collect();
    parts.iter().fold(Moments::default(), |acc, m| acc.merge(m))
}

/// Monte Carlo estimate of `λᵢ = E[λ′ᵢ(y, k)]` for index `i` (zero-based).
///
/// `sigma` need not be sorted. Each trial draws the full vector `y` in index
/// order.
pub fn lambda_monte_carlo(
    sigma: &[f64],
    i: usize,
    k: u32,
    trials: u64,
    stream: RngStream,
) -> Result<McEstimate, AnalysisError> {
    let weights = power_weights(sigma, i, k)?;
    if trials == 0 {
        return Err(AnalysisError::InvalidInput("trials must be at least 1".into()));
    }
    let moments = chunked_moments(trials, stream, |s, len, m| {
        let mut g = s.sampler();
        let mut y = vec![0.0; weights.len()];
        for _ in 0..len {
            g.fill(&mut y);
            m.push(coefficient(&weights, &y, i));
        }
    });
    Ok(moments.into())
}

/// `σₗ^{2k}` rescaled by the largest value, which leaves every ratio intact.
pub(crate) fn power_weights(sigma: &[f64], i: usize, k: u32) -> Result<Vec<f64>, AnalysisError> {
    if sigma.is_empty() || i >= sigma.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "index {i} out of range for {} values",
            sigma.len()
        )));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(AnalysisError::InvalidInput(
            "singular values must be finite and non-negative".into(),
        ));
    }
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(AnalysisError::InvalidInput("all singular values are zero".into()));
    }
    let exponent =
        i32::try_from(2 * u64::from(k)).map_err(|_| AnalysisError::InvalidInput(format!("k = {k} is too large")))?;
    Ok(sigma.iter().map(|s| (s / max).powi(exponent)).collect())
}

/// `(wᵢyᵢ)² / Σₗ (wₗyₗ)²`, or 0 when every weighted draw vanishes.
pub(crate) fn coefficient(weights: &[f64], y: &[f64], i: usize) -> f64 {
    let mut total = 0.0;
    for (w, v) in weights.iter().zip(y) {
        let t = w * v;
        total += t * t;
    }
    let ti = weights[i] * y[i];
    if total > 0.0 {
        ti * ti / total
    } else {
        0.0
    }
}
