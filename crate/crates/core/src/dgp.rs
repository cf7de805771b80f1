//! Simulation designs for predictive regressions.
//!
//! Innovations `(ξ_k, u_k)` are i.i.d. bivariate normal with unit variances and
//! correlation `δ`. The regressor is either a near-integrated array
//! `x_k = (1 + c/n) x_{k−1} + ξ_k` with `x_0 = 0`, or a type-II fractional
//! process `(1 − L)^d x_k = ξ_k 1{k ≥ 1}`. The response is
//! `y_{k+1} = μ + β x_k + u_{k+1}`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::filter;

pub use crate::filter::frac_coeffs;

/// Law of the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    NearIntegrated { c: f64 },
    FractionalTypeII { d: f64 },
}

impl Regressor {
    /// The persistence parameter: `c` or `d`.
    pub fn parameter(&self) -> f64 {
        match *self {
            Regressor::NearIntegrated { c } => c,
            Regressor::FractionalTypeII { d } => d,
        }
    }

    pub fn regime(&self) -> &'static str {
        match self {
            Regressor::NearIntegrated { .. } => "ni",
            Regressor::FractionalTypeII { .. } => "fractional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub delta: f64,
    pub regressor: Regressor,
    pub beta: f64,
    pub mu: f64,
    pub n: usize,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.abs() <= 1.0) {
            return Err(domain(format!("|delta| must be at most 1, got {}", self.delta)));
        }
        match self.regressor {
            Regressor::NearIntegrated { c } if !(c <= 0.0 && c.is_finite()) => {
                return Err(domain(format!("near-integrated c must be <= 0, got {c}")));
            }
            Regressor::FractionalTypeII { d } if !(d > 0.0 && d < 1.5) => {
                return Err(domain(format!("fractional d must lie in (0, 1.5), got {d}")));
            }
            _ => {}
        }
        if self.n == 0 {
            return Err(domain("sample size must be positive"));
        }
        if !(self.beta.is_finite() && self.mu.is_finite()) {
            return Err(domain("beta and mu must be finite"));
        }
        Ok(())
    }
}

/// A simulated sample ready for regression.
///
/// `x[i]` is the predetermined regressor `x_{i+1}` and `y[i]` is the response
/// `y_{i+2} = μ + β x_{i+1} + u_{i+2}` it predicts, so the pairs
/// `(y[i], x[i])` are the `n` observations of the predictive regression.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `n` i.i.d. pairs `(ξ_k, u_k)` with `u = δ ξ + √(1 − δ²) e`.
pub fn gen_innovations<R: Rng + ?Sized>(delta: f64, n: usize, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(delta.abs() <= 1.0) {
        return Err(domain(format!("|delta| must be at most 1, got {delta}")));
    }
    let scale = (1.0 - delta * delta).sqrt();
    let mut xi = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        xi.push(a);
        u.push(if scale == 0.0 { delta * a } else { delta * a + scale * e });
    }
    Ok((xi, u))
}

/// Near-integrated array with `x_0 = 0` and `n = xi.len()`.
pub fn gen_near_integrated(c: f64, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.is_empty() {
        return Err(domain("innovation vector is empty"));
    }
    if !(c <= 0.0) {
        return Err(domain(format!("near-integrated c must be <= 0, got {c}")));
    }
    let rho = 1.0 + c / xi.len() as f64;
    let mut prev = 0.0;
    Ok(xi
        .iter()
        .map(|&e| {
            prev = rho * prev + e;
            prev
        })
        .collect())
}

/// Type-II fractional process `x_k = Σ_{j<k} ψ_j ξ_{k−j}`.
pub fn gen_fractional(d: f64, xi: &[f64]) -> Result<Vec<f64>> {
    if !(d > 0.0 && d < 1.5) {
        return Err(domain(format!("fractional d must lie in (0, 1.5), got {d}")));
    }
    Ok(filter::frac_integrate(d, xi))
}

/// One sample from `spec`.
///
/// Draws `n + 1` innovation pairs: `ξ_1..ξ_n` build the regressor and
/// `u_2..u_{n+1}` enter the responses, each `u_{k+1}` jointly drawn with `ξ_{k+1}`.
pub fn gen_series<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<SeriesPair> {
    spec.validate()?;
    let n = spec.n;
    let (xi, u) = gen_innovations(spec.delta, n + 1, rng)?;
    let x = match spec.regressor {
        Regressor::NearIntegrated { c } => gen_near_integrated(c, &xi[..n])?,
        Regressor::FractionalTypeII { d } => gen_fractional(d, &xi[..n])?,
    };
    let y = x.iter().zip(&u[1..]).map(|(&xk, &uk1)| spec.mu + spec.beta * xk + uk1).collect();
    Ok(SeriesPair { x, y })
}
