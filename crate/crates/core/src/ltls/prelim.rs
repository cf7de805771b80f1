use serde::Serialize;

use crate::error::{domain, Result};
use crate::ols;

/// Statistics from the two preliminary OLS regressions
/// `y_{k+1} = μ̃ + β̃ x_k + ũ_{k+1}` and `x_k = μ̃_x + ρ̃ x_{k−1} + ξ̃_k`.
#[derive(Debug, Clone, Serialize)]
pub struct PrelimStats {
    pub beta_tilde: f64,
    pub rho_tilde: f64,
    /// `n⁻¹ Σ ũ²` over all `n` predictive residuals.
    pub sigma_u2: f64,
    /// `(n−1)⁻¹ Σ ξ̃²`.
    pub sigma_xi2: f64,
    /// Residual correlation over the common index range `k = 2..n`.
    pub delta_tilde: f64,
    /// Set when a residual series has zero variance; `delta_tilde` is then 0.
    pub degenerate: bool,
    #[serde(skip)]
    pub residuals_u: Vec<f64>,
    #[serde(skip)]
    pub residuals_xi: Vec<f64>,
}

/// Runs both preliminary regressions on the aligned predictive sample
/// (`x[i]` predicts `y[i]`).
pub fn preliminary_ols(y: &[f64], x: &[f64]) -> Result<PrelimStats> {
    if y.len() != x.len() {
        return Err(domain(format!("length mismatch: y has {}, x has {}", y.len(), x.len())));
    }
    let n = y.len();
    if n < 4 {
        return Err(domain(format!("preliminary regressions need n >= 4, got {n}")));
    }
    let pred = ols::fit_with_intercept(y, x)?;
    let ar = ols::fit_with_intercept(&x[1..], &x[..n - 1])?;

    let ssu: f64 = pred.residuals.iter().map(|r| r * r).sum();
    let ssxi: f64 = ar.residuals.iter().map(|r| r * r).sum();
    let sigma_u2 = ssu / n as f64;
    let sigma_xi2 = ssxi / (n - 1) as f64;

    // ũ_{k} and ξ̃_{k} for k = 2..n are the first n − 1 entries of each series.
    let common = n - 1;
    let u_c = &pred.residuals[..common];
    let xi_c = &ar.residuals[..common];
    let suu: f64 = u_c.iter().map(|r| r * r).sum();
    let suxi: f64 = u_c.iter().zip(xi_c).map(|(a, b)| a * b).sum();

    let y_scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let x_scale: f64 = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let degenerate = !(suu > 1e-20 * y_scale && ssxi > 1e-20 * x_scale);
    let delta_tilde = if degenerate { 0.0 } else { (suxi / (suu * ssxi).sqrt()).clamp(-1.0, 1.0) };

    Ok(PrelimStats {
        beta_tilde: pred.slope,
        rho_tilde: ar.slope,
        sigma_u2,
        sigma_xi2,
        delta_tilde,
        degenerate,
        residuals_u: pred.residuals,
        residuals_xi: ar.residuals,
    })
}
