//! Simple bivariate least squares used by the preliminary regressions and
//! the baseline tests.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct SimpleFit {
    pub slope: f64,
    pub residuals: Vec<f64>,
    /// `Σ (x − x̄)²`
    pub sxx: f64,
}

/// OLS of `y` on `(1, x)`.
pub(crate) fn fit_with_intercept(y: &[f64], x: &[f64]) -> Result<SimpleFit> {
    debug_assert_eq!(y.len(), x.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(sxx > 1e-14 * scale) {
        return Err(Error::SingularDesign("regressor has zero sample variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(&xi, &yi)| yi - intercept - slope * xi).collect();
    Ok(SimpleFit { slope, residuals, sxx })
}

/// OLS of `y` on `x` without intercept; returns `(slope, residuals)`.
pub(crate) fn fit_through_origin(y: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::SingularDesign("regressor is identically zero".into()));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let residuals = x.iter().zip(y).map(|(&xi, &yi)| yi - slope * xi).collect();
    Ok((slope, residuals))
}
