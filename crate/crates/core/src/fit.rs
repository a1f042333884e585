//! Decay-model fits for suboptimality sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterations before this index are treated as transients and never fitted.
pub const FIRST_FIT_ITERATION: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateModel {
    /// `y_t ≈ C q^t`, fitted by least squares on `(t, ln y_t)`.
    Geometric,
    /// `y_t ≈ C / t`, fitted as the geometric mean of `t y_t`.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub fitted_constant: f64,
    /// Per-iteration contraction `q` for the geometric model, 1 otherwise.
    pub ratio: f64,
    /// Largest `|y_t / ŷ_t - 1|` over the fit window.
    pub residual: f64,
    pub first_t: usize,
    pub last_t: usize,
}

impl RateFit {
    pub fn predict(&self, t: usize) -> f64 {
        let t = t as f64;
        match self.model {
            RateModel::Geometric => self.fitted_constant * self.ratio.powf(t),
            RateModel::Inverse => self.fitted_constant / t,
        }
    }
}

/// Fits `model` to the points `(t, y_t)`; every `t` must be at least
/// [`FIRST_FIT_ITERATION`] and every `y_t` positive.
pub fn fit(model: RateModel, points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Domain("a fit needs at least two points".into()));
    }
    if let Some(&(t, _)) = points.iter().find(|p| p.0 < FIRST_FIT_ITERATION) {
        return Err(Error::Domain(format!(
            "iteration {t} lies in the transient window"
        )));
    }
    if let Some(&(t, y)) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::Domain(format!(
            "non-positive suboptimality {y} at t = {t}"
        )));
    }
    let k = points.len() as f64;
    let (fitted_constant, ratio) = match model {
        RateModel::Inverse => {
            let mean = points
                .iter()
                .map(|&(t, y)| (y * t as f64).ln())
                .sum::<f64>()
                / k;
            (mean.exp(), 1.0)
        }
        RateModel::Geometric => {
            let tm = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
            let ym = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
            let sxy: f64 = points
                .iter()
                .map(|&(t, y)| (t as f64 - tm) * (y.ln() - ym))
                .sum();
            let sxx: f64 = points.iter().map(|&(t, _)| (t as f64 - tm).powi(2)).sum();
            let slope = sxy / sxx;
            ((ym - slope * tm).exp(), slope.exp())
        }
    };
    let mut out = RateFit {
        model,
        fitted_constant,
        ratio,
        residual: 0.0,
        first_t: points.iter().map(|p| p.0).min().unwrap_or(0),
        last_t: points.iter().map(|p| p.0).max().unwrap_or(0),
    };
    out.residual = points
        .iter()
        .map(|&(t, y)| (y / out.predict(t) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(out)
}
