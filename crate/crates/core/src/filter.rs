//! Fractional filters `(1 − L)^{±d}` with zero pre-sample values.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Above this length, truncated convolutions go through the FFT.
pub(crate) const FFT_THRESHOLD: usize = 256;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    })
}

/// MA(∞) coefficients of `(1 − L)^{−d}` truncated at lag `m`:
/// `ψ_0 = 1`, `ψ_j = ψ_{j−1} (j − 1 + d) / j`.
pub fn frac_coeffs(d: f64, m: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(m + 1);
    psi.push(1.0);
    for j in 1..=m {
        let prev = psi[j - 1];
        psi.push(prev * (j as f64 - 1.0 + d) / j as f64);
    }
    psi
}

/// `y_k = Σ_{j=0}^{k} c_j x_{k−j}` for `k = 0..n`, by direct summation.
pub fn convolve_direct(coeffs: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let upto = k.min(coeffs.len().saturating_sub(1));
            (0..=upto).map(|j| coeffs[j] * x[k - j]).sum()
        })
        .collect()
}

/// Same as [`convolve_direct`] but through a zero-padded FFT.
pub fn convolve_fft(coeffs: &[f64], x: &[f64]) -> Vec<f64> {
    TruncatedConvolver::new(x).apply(coeffs)
}

/// Truncated causal convolution, choosing the direct or FFT path by length.
pub fn convolve(coeffs: &[f64], x: &[f64]) -> Vec<f64> {
    if x.len() > FFT_THRESHOLD {
        convolve_fft(coeffs, x)
    } else {
        convolve_direct(coeffs, x)
    }
}

/// Holds the transform of a fixed series so that many filters can be applied
/// to it cheaply.
pub(crate) struct TruncatedConvolver {
    n: usize,
    x_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TruncatedConvolver {
    pub(crate) fn new(x: &[f64]) -> Self {
        let n = x.len();
        let len = (2 * n).max(2).next_power_of_two();
        let (forward, inverse) = plan(len);
        let mut x_hat: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        x_hat.resize(len, Complex64::new(0.0, 0.0));
        forward.process(&mut x_hat);
        Self { n, x_hat, forward, inverse }
    }

    pub(crate) fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let len = self.x_hat.len();
        let mut c: Vec<Complex64> = coeffs.iter().take(self.n).map(|&v| Complex64::new(v, 0.0)).collect();
        c.resize(len, Complex64::new(0.0, 0.0));
        self.forward.process(&mut c);
        for (ci, xi) in c.iter_mut().zip(&self.x_hat) {
            *ci *= xi;
        }
        self.inverse.process(&mut c);
        let scale = 1.0 / len as f64;
        c[..self.n].iter().map(|z| z.re * scale).collect()
    }
}

/// Type-II fractional integration `(1 − L)^{−d}` of `xi`.
pub fn frac_integrate(d: f64, xi: &[f64]) -> Vec<f64> {
    if xi.is_empty() {
        return Vec::new();
    }
    convolve(&frac_coeffs(d, xi.len() - 1), xi)
}

/// Type-II fractional difference `(1 − L)^{d}` of `x`.
pub fn frac_difference(d: f64, x: &[f64]) -> Vec<f64> {
    frac_integrate(-d, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_gamma(x: f64) -> f64 {
        statrs::function::gamma::ln_gamma(x)
    }

    #[test]
    fn closed_form_low_order_coefficients() {
        let psi = frac_coeffs(0.5, 3);
        assert_eq!(psi[0], 1.0);
        assert_eq!(psi[1], 0.5);
        assert_eq!(psi[2], 0.375);
        assert!(frac_coeffs(1.0, 40).iter().all(|&c| c == 1.0));
    }

    #[test]
    fn coefficients_match_log_gamma_ratio() {
        let d = 1.2;
        let psi = frac_coeffs(d, 50);
        for (j, &c) in psi.iter().enumerate() {
            let jf = j as f64;
            let oracle = (ln_gamma(jf + d) - ln_gamma(d) - ln_gamma(jf + 1.0)).exp();
            assert!(((c - oracle) / oracle).abs() < 1e-10, "j={j}: {c} vs {oracle}");
        }
    }

    #[test]
    fn fft_path_matches_direct_path() {
        let x: Vec<f64> = (0..700).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        for d in [0.3, 0.8, 1.0, 1.4, -0.7] {
            let c = frac_coeffs(d, x.len() - 1);
            let a = convolve_direct(&c, &x);
            let b = convolve_fft(&c, &x);
            let max = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(max < 1e-9, "d={d}: max deviation {max}");
        }
    }
}
