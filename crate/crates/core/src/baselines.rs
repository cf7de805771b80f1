//! Comparison tests: the conventional OLS t-test and the IVX Wald test with
//! the finite-sample intercept correction of Kostakis, Magdalinos and
//! Stamatogiannis (2015).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ols;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BaselineMethod {
    Ols,
    Ivx,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub beta_hat: f64,
    pub t_stat: f64,
    /// Realized tuning values (`c_z`, `b`, long-run bandwidth).
    pub nuisance: BTreeMap<&'static str, f64>,
}

fn check_pair(y: &[f64], x: &[f64], min: usize) -> Result<()> {
    if y.len() != x.len() {
        return Err(domain(format!("length mismatch: y has {}, x has {}", y.len(), x.len())));
    }
    if y.len() < min {
        return Err(domain(format!("need at least {min} observations, got {}", y.len())));
    }
    Ok(())
}

/// Intercept-included OLS with `σ̂² = (n − 2)⁻¹ Σ ê²`.
///
/// A perfect fit gives `t = ±∞` (or `NaN` at the null value) and is reported
/// as a [`Error::DegenerateStudentization`].
pub fn ols_ttest(y: &[f64], x: &[f64], beta0: f64) -> Result<BaselineResult> {
    check_pair(y, x, 4)?;
    let fit = ols::fit_with_intercept(y, x)?;
    let n = y.len() as f64;
    let ss: f64 = fit.residuals.iter().map(|r| r * r).sum();
    let y_scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(ss > 1e-24 * y_scale) {
        return Err(Error::DegenerateStudentization("OLS residual variance is zero".into()));
    }
    let se = (ss / (n - 2.0) / fit.sxx).sqrt();
    Ok(BaselineResult {
        method: BaselineMethod::Ols,
        beta_hat: fit.slope,
        t_stat: (fit.slope - beta0) / se,
        nuisance: BTreeMap::new(),
    })
}

/// IVX instrument `Z_k = Σ_{j<k} ρ_z^j Δx_{k−j}` with `ρ_z = 1 + c_z/n^b`
/// and `x_0 = 0`, via `Z_k = ρ_z Z_{k−1} + Δx_k`.
pub fn ivx_instrument(x: &[f64], c_z: f64, b: f64) -> Result<Vec<f64>> {
    if !(c_z < 0.0) {
        return Err(domain(format!("c_z must be negative, got {c_z}")));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(domain(format!("b must lie in (0, 1), got {b}")));
    }
    let rho = 1.0 + c_z / (x.len() as f64).powf(b);
    let mut z = Vec::with_capacity(x.len());
    let mut prev_x = 0.0;
    let mut acc = 0.0;
    for &v in x {
        acc = rho * acc + (v - prev_x);
        prev_x = v;
        z.push(acc);
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvxConfig {
    pub c_z: f64,
    pub b: f64,
    /// Apply the finite-sample intercept correction.
    pub correction: bool,
}

impl Default for IvxConfig {
    fn default() -> Self {
        Self { c_z: -1.0, b: 0.95, correction: true }
    }
}

/// Bartlett-weighted `n⁻¹ Σ_{h=1}^{M} (1 − h/(M+1)) Σ_t a_t c_{t−h}`.
fn bartlett_lag_sum(a: &[f64], c: &[f64], bandwidth: usize) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for h in 1..=bandwidth.min(n.saturating_sub(1)) {
        let w = 1.0 - h as f64 / (bandwidth as f64 + 1.0);
        let s: f64 = (h..n).map(|t| a[t] * c[t - h]).sum();
        total += w * s;
    }
    total / n as f64
}

/// IVX t-statistic for `β = β₀` where `x[k]` predicts `y[k]`.
///
/// The slope is `Σ Z_k ȳ_k / Σ Z_k x̄_k` with ordinary demeaning of `y` and `x`
/// and an undemeaned instrument. The variance is
/// `M / (Σ Z_k x̄_k)²` with
/// `M = Σ Z² σ̂_ee − n z̄² Ω̂_FM`, `Ω̂_FM = σ̂_ee − Ω̂_eu² / Ω̂_uu`, the long-run
/// terms using Bartlett weights with bandwidth `⌊n^{1/3}⌋`.
pub fn ivx_ttest(y: &[f64], x: &[f64], beta0: f64, cfg: IvxConfig) -> Result<BaselineResult> {
    check_pair(y, x, 8)?;
    let n = y.len();
    let nf = n as f64;
    let z = ivx_instrument(x, cfg.c_z, cfg.b)?;

    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut szx = 0.0;
    let mut szy = 0.0;
    for ((&zk, &xk), &yk) in z.iter().zip(x).zip(y) {
        szx += zk * (xk - mx);
        szy += zk * (yk - my);
    }
    let scale: f64 = z.iter().zip(x).map(|(a, b)| (a * b).abs()).sum();
    if !(szx.abs() > 1e-13 * scale) {
        return Err(Error::SingularDesign("instrument–regressor moment is zero".into()));
    }
    let beta_hat = szy / szx;

    // Predictive residuals ε̂ (with intercept) and autoregressive residuals û
    // (through the origin), aligned over the n − 1 periods where both exist.
    let pred = ols::fit_with_intercept(y, x)?;
    let (rho_hat, u_hat) = ols::fit_through_origin(&x[1..], &x[..n - 1])?;
    let eps = &pred.residuals[..n - 1];

    let sigma_ee = pred.residuals.iter().map(|e| e * e).sum::<f64>() / nf;
    let m_eff = (n - 1) as f64;
    let sigma_uu = u_hat.iter().map(|u| u * u).sum::<f64>() / m_eff;
    let sigma_eu = eps.iter().zip(&u_hat).map(|(e, u)| e * u).sum::<f64>() / m_eff;
    let bandwidth = nf.powf(1.0 / 3.0).floor() as usize;
    let omega_uu = sigma_uu + 2.0 * bartlett_lag_sum(&u_hat, &u_hat, bandwidth);
    let omega_eu = sigma_eu + bartlett_lag_sum(&u_hat, eps, bandwidth);

    let szz: f64 = z.iter().map(|v| v * v).sum();
    let mut m = szz * sigma_ee;
    if cfg.correction {
        let omega_fm = if omega_uu > 0.0 { sigma_ee - omega_eu * omega_eu / omega_uu } else { sigma_ee };
        let z_bar = z.iter().sum::<f64>() / nf;
        m -= nf * z_bar * z_bar * omega_fm;
    }
    if !(m > 0.0) {
        return Err(Error::DegenerateStudentization(format!("IVX variance term is not positive ({m:e})")));
    }
    let t_stat = (beta_hat - beta0) * szx.abs() / m.sqrt();

    let nuisance = BTreeMap::from([
        ("c_z", cfg.c_z),
        ("b", cfg.b),
        ("bandwidth", bandwidth as f64),
        ("rho_hat", rho_hat),
        ("correction", if cfg.correction { 1.0 } else { 0.0 }),
    ]);
    Ok(BaselineResult { method: BaselineMethod::Ivx, beta_hat, t_stat, nuisance })
}
