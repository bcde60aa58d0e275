use std::ops::Deref;

use super::LinalgError;

/// Singular values sorted non-increasing, all non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(LinalgError::InvalidSpectrum(format!(
                "singular values must be finite and non-negative, got {v}"
            )));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(LinalgError::InvalidSpectrum(
                "singular values must be sorted non-increasing".into(),
            ));
        }
        Ok(Self(values))
    }

    /// Sorts the values first.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self, LinalgError> {
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn largest(&self) -> f64 {
        self.0[0]
    }

    /// `σ_max / σ_min`; infinite when the smallest value is zero.
    pub fn condition_number(&self) -> f64 {
        let last = *self.0.last().expect("non-empty");
        if last == 0.0 {
            f64::INFINITY
        } else {
            self.0[0] / last
        }
    }
}

impl Deref for Spectrum {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
