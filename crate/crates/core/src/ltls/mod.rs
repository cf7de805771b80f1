//! The locally trimmed least squares (LTLS) estimator and its t-test.
//!
//! With instrument `Z_kn = f(x_k) K_kn` and trimmed demeaning
//! `ā = Σ a_k K*_kn / Σ K*_kn`, the estimator is
//!
//! ```text
//! β̂ = Σ Z_kn ȳ_k / Σ Z_kn f̄_k
//! ```
//!
//! and the test of `H₀: β = β₀` uses
//!
//! ```text
//! T̂ = 𝒞_n (β̂ − β₀) / √(σ̃² 𝒜_n 𝒱_n 𝒜_nᵀ),   𝒞_n = Σ Z_kn f̄_k
//! 𝒱_n = [ Σ K_kn² f_k²       Σ K*_kn K_kn f_k ]
//!       [ Σ K*_kn K_kn f_k   Σ (K*_kn)²       ]
//! ```
//!
//! where `σ̃²` is the OLS residual variance of `y` on `(1, f(x))`.

mod prelim;
mod setup;

use serde::Serialize;

pub use prelim::{preliminary_ols, PrelimStats};
pub use setup::{resolve_setup, KernelScaling, ResolvedSetup, SetupId, Studentization};

use crate::error::{domain, Error, Result};
use crate::kernels::{trimming_weights, TrimmingScheme};
use crate::ols;

/// Minimum sample size for the raw estimator; the tuned setups need 8.
pub const MIN_OBS: usize = 3;

/// One regression problem: `y_k = μ + β f(x_k) + u_k`, with `fx[k] = f(x_k)`.
#[derive(Debug, Clone)]
pub struct RegressionInput<'a> {
    pub y: &'a [f64],
    pub fx: &'a [f64],
    pub scheme: TrimmingScheme,
    pub beta0: f64,
}

impl<'a> RegressionInput<'a> {
    pub fn new(y: &'a [f64], fx: &'a [f64], scheme: TrimmingScheme) -> Self {
        Self { y, fx, scheme, beta0: 0.0 }
    }

    pub fn with_beta0(mut self, beta0: f64) -> Self {
        self.beta0 = beta0;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.y.len() != self.fx.len() {
            return Err(domain(format!("length mismatch: y has {}, f(x) has {}", self.y.len(), self.fx.len())));
        }
        if self.y.len() < MIN_OBS {
            return Err(domain(format!("need at least {MIN_OBS} observations, got {}", self.y.len())));
        }
        if self.y.iter().chain(self.fx).any(|v| !v.is_finite()) {
            return Err(domain("data contain non-finite values"));
        }
        Ok(())
    }
}

/// Weighted mean `Σ a_k w_k / Σ w_k`.
///
/// Computed around `a_0` so that a constant vector returns its value exactly.
pub fn trimmed_mean(a: &[f64], weights: &[f64]) -> Result<f64> {
    if a.len() != weights.len() {
        return Err(domain("trimmed mean: length mismatch"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights("demeaning weights sum to zero".into()));
    }
    let base = a[0];
    let shift: f64 = a.iter().zip(weights).map(|(v, w)| (v - base) * w).sum();
    Ok(base + shift / total)
}

/// Point estimate and the sums it is built from.
#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub beta_hat: f64,
    /// `Σ Z_kn ȳ_k`
    pub numerator: f64,
    /// `𝒞_n = Σ Z_kn f̄_k`
    pub denominator: f64,
    /// `Σ K_kn`
    pub sum_k: f64,
    /// `Σ K*_kn`
    pub sum_k_star: f64,
}

/// Estimate together with its studentization.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult {
    pub beta_hat: f64,
    pub t_stat: f64,
    pub beta0: f64,
    /// `𝒞_n`
    pub denominator: f64,
    pub numerator: f64,
    /// `𝒜_n` (or `𝒜*_n`)
    pub a_n: [f64; 2],
    /// `𝒱_n`, symmetric.
    pub v_n: [[f64; 2]; 2],
    pub sigma_tilde2: f64,
    /// Filled in when the preliminary regressions were run on the raw regressor.
    pub delta_tilde: Option<f64>,
    pub variant: Studentization,
    pub scheme_used: TrimmingScheme,
}

struct Moments {
    est: Estimate,
    k_kn: Vec<f64>,
    k_star: Vec<f64>,
}

fn moments(input: &RegressionInput<'_>) -> Result<Moments> {
    input.validate()?;
    let n = input.y.len();
    let (k_kn, k_star) = trimming_weights(&input.scheme, n)?;
    let y_bar = trimmed_mean(input.y, &k_star)?;
    let f_bar = trimmed_mean(input.fx, &k_star)?;

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for ((&y, &f), &w) in input.y.iter().zip(input.fx).zip(&k_kn) {
        let z = f * w;
        numerator += z * (y - y_bar);
        denominator += z * (f - f_bar);
    }
    let scale: f64 = input.fx.iter().zip(&k_kn).map(|(f, w)| f * f * w).sum();
    if !(denominator.abs() > 1e-13 * scale) || !denominator.is_finite() {
        return Err(Error::SingularDesign(format!("instrument–regressor moment is zero ({denominator:e})")));
    }
    let est = Estimate {
        beta_hat: numerator / denominator,
        numerator,
        denominator,
        sum_k: k_kn.iter().sum(),
        sum_k_star: k_star.iter().sum(),
    };
    Ok(Moments { est, k_kn, k_star })
}

/// LTLS point estimate.
pub fn ltls_estimate(input: &RegressionInput<'_>) -> Result<Estimate> {
    moments(input).map(|m| m.est)
}

/// LTLS estimate and t-statistic for `H₀: β = input.beta0`.
pub fn ltls_tstat(input: &RegressionInput<'_>, variant: Studentization) -> Result<EstimationResult> {
    let Moments { est, k_kn, k_star } = moments(input)?;
    let n = input.y.len();

    let fit = ols::fit_with_intercept(input.y, input.fx)?;
    let sigma_tilde2 = fit.residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;

    let mut sum_fk = 0.0;
    let mut sum_fks = 0.0;
    let mut v11 = 0.0;
    let mut v12 = 0.0;
    let mut v22 = 0.0;
    for ((&f, &w), &ws) in input.fx.iter().zip(&k_kn).zip(&k_star) {
        sum_fk += f * w;
        sum_fks += f * ws;
        v11 += w * w * f * f;
        v12 += ws * w * f;
        v22 += ws * ws;
    }
    let a = match variant {
        Studentization::Standard => sum_fk / est.sum_k_star,
        Studentization::Star => sum_fks / est.sum_k_star,
    };
    let quad = v11 - 2.0 * a * v12 + a * a * v22;
    if !(quad > 0.0) || !quad.is_finite() {
        return Err(Error::DegenerateStudentization(format!("variance quadratic form is not positive ({quad:e})")));
    }

    let shift = est.denominator * (est.beta_hat - input.beta0);
    let y_scale: f64 = input.y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let t_stat = if sigma_tilde2 > 1e-24 * y_scale / n as f64 {
        shift / (sigma_tilde2 * quad).sqrt()
    } else if shift.abs() <= 1e-9 * est.denominator.abs() * (1.0 + input.beta0.abs()) {
        // Noiseless data under the null.
        0.0
    } else {
        return Err(Error::DegenerateStudentization("residual variance is zero under the alternative".into()));
    };

    Ok(EstimationResult {
        beta_hat: est.beta_hat,
        t_stat,
        beta0: input.beta0,
        denominator: est.denominator,
        numerator: est.numerator,
        a_n: [1.0, -a],
        v_n: [[v11, v12], [v12, v22]],
        sigma_tilde2,
        delta_tilde: None,
        variant,
        scheme_used: input.scheme.clone(),
    })
}

/// A configured LTLS test: setup, kernel scaling and null value.
#[derive(Debug, Clone, PartialEq)]
pub struct LtlsTest {
    pub setup: SetupId,
    pub scaling: KernelScaling,
    pub beta0: f64,
}

impl LtlsTest {
    pub fn new(setup: SetupId) -> Self {
        Self { setup, scaling: KernelScaling::Fixed, beta0: 0.0 }
    }

    pub fn with_scaling(mut self, scaling: KernelScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_beta0(mut self, beta0: f64) -> Self {
        self.beta0 = beta0;
        self
    }

    /// Tests `β = β₀` in `y_k = μ + β x_k + u_k` (identity `f`), where `x[k]`
    /// is the predetermined regressor paired with `y[k]`.
    pub fn run(&self, y: &[f64], x: &[f64]) -> Result<EstimationResult> {
        let prelim = preliminary_ols(y, x)?;
        self.run_with_prelim(y, x, &prelim)
    }

    /// As [`run`](Self::run) with a nonlinear regression function `f`.
    pub fn run_transformed(&self, y: &[f64], x: &[f64], f: impl Fn(f64) -> f64) -> Result<EstimationResult> {
        let prelim = preliminary_ols(y, x)?;
        let fx: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        self.run_with_prelim(y, &fx, &prelim)
    }

    /// Uses precomputed preliminary statistics, so several setups can share
    /// one pair of preliminary regressions.
    pub fn run_with_prelim(&self, y: &[f64], fx: &[f64], prelim: &PrelimStats) -> Result<EstimationResult> {
        let resolved = resolve_setup(&self.setup, y.len(), prelim, self.scaling)?;
        let input = RegressionInput::new(y, fx, resolved.scheme).with_beta0(self.beta0);
        let mut out = ltls_tstat(&input, resolved.variant)?;
        out.delta_tilde = Some(prelim.delta_tilde);
        Ok(out)
    }
}
