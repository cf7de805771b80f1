//! Semiparametric memory estimation: local Whittle (Robinson, 1995) and exact
//! local Whittle (Shimotsu and Phillips, 2005).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::filter::{self, frac_coeffs, TruncatedConvolver};

pub const LW_INTERVAL: (f64, f64) = (-0.5, 1.5);
pub const ELW_INTERVAL: (f64, f64) = (-0.5, 2.0);
const GRID_STEP: f64 = 1.0 / 300.0;
const GOLDEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MemoryMethod {
    #[serde(rename = "LW")]
    Lw,
    #[serde(rename = "ELW")]
    Elw,
}

impl MemoryMethod {
    pub fn label(self) -> &'static str {
        match self {
            MemoryMethod::Lw => "LW",
            MemoryMethod::Elw => "ELW",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MemoryEstimate {
    pub d_hat: f64,
    pub method: MemoryMethod,
    pub bandwidth_m: usize,
    pub bandwidth_exponent_b: f64,
    pub objective_at_opt: f64,
}

/// `I(λ_j) = (2πn)⁻¹ |Σ_k x_k e^{−iλ_j k}|²` at `λ_j = 2πj/n`,
/// `j = 1..⌊(n−1)/2⌋`.
pub fn periodogram(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 4 {
        return Err(domain(format!("periodogram needs n >= 4, got {n}")));
    }
    Ok(periodogram_upto(x, (n - 1) / 2))
}

fn periodogram_upto(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let (forward, _) = filter::plan(n);
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    let norm = 1.0 / (2.0 * PI * n as f64);
    buf[1..=m].iter().map(|z| z.norm_sqr() * norm).collect()
}

/// `m = ⌊n^b⌋`, checked against `4 <= m < n/2`.
pub fn bandwidth(n: usize, b: f64) -> Result<usize> {
    if !(b > 0.0 && b < 1.0) {
        return Err(domain(format!("bandwidth exponent must lie in (0, 1), got {b}")));
    }
    let m = (n as f64).powf(b).floor() as usize;
    if m < 4 || m > (n.saturating_sub(1)) / 2 {
        return Err(Error::Bandwidth { m, n });
    }
    Ok(m)
}

fn check_input(x: &[f64], b: f64) -> Result<usize> {
    if x.len() < 64 {
        return Err(domain(format!("memory estimation needs n >= 64, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(domain("series contains non-finite values"));
    }
    bandwidth(x.len(), b)
}

fn mean_log_freq(n: usize, m: usize) -> f64 {
    (1..=m).map(|j| (2.0 * PI * j as f64 / n as f64).ln()).sum::<f64>() / m as f64
}

/// Minimizes `f` on `[lo, hi]`: grid with step 1/300, then golden-section
/// refinement on the bracket around the best grid point.
fn grid_then_golden(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let steps = ((hi - lo) / GRID_STEP).round() as usize;
    let grid = |i: usize| lo + (hi - lo) * i as f64 / steps as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..=steps {
        let v = f(grid(i));
        if v < best.1 {
            best = (i, v);
        }
    }
    let (mut a, mut b) = (grid(best.0.saturating_sub(1)), grid((best.0 + 1).min(steps)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    if fm <= best.1 {
        (mid, fm)
    } else {
        (grid(best.0), best.1)
    }
}

/// Local Whittle objective `R(d)` over the first `m` ordinates.
pub struct LwObjective {
    log_freq: Vec<f64>,
    ordinates: Vec<f64>,
    mean_log: f64,
}

impl LwObjective {
    pub fn new(x: &[f64], m: usize) -> Result<Self> {
        let n = x.len();
        if m < 1 || m > n.saturating_sub(1) / 2 {
            return Err(Error::Bandwidth { m, n });
        }
        let ordinates = periodogram_upto(x, m);
        let log_freq: Vec<f64> = (1..=m).map(|j| (2.0 * PI * j as f64 / n as f64).ln()).collect();
        let mean_log = log_freq.iter().sum::<f64>() / m as f64;
        Ok(Self { log_freq, ordinates, mean_log })
    }

    pub fn eval(&self, d: f64) -> f64 {
        let m = self.ordinates.len() as f64;
        let s: f64 = self.log_freq.iter().zip(&self.ordinates).map(|(l, i)| (2.0 * d * l).exp() * i).sum();
        (s / m).ln() - 2.0 * d * self.mean_log
    }
}

/// Local Whittle estimate of `d` with `m = ⌊n^b⌋`, searched on `[−0.5, 1.5]`.
pub fn lw_estimate(x: &[f64], b: f64) -> Result<MemoryEstimate> {
    let m = check_input(x, b)?;
    let obj = LwObjective::new(x, m)?;
    let (d_hat, value) = grid_then_golden(&mut |d| obj.eval(d), LW_INTERVAL.0, LW_INTERVAL.1);
    Ok(MemoryEstimate {
        d_hat,
        method: MemoryMethod::Lw,
        bandwidth_m: m,
        bandwidth_exponent_b: b,
        objective_at_opt: value,
    })
}

/// Type-II fractional difference `y_k = Σ_{j<k} π_j x_{k−j}`.
pub fn frac_diff(x: &[f64], d: f64) -> Vec<f64> {
    filter::frac_difference(d, x)
}

/// Exact local Whittle objective `R*(d)`. The series is centred on its first
/// observation before differencing.
pub struct ElwObjective {
    conv: TruncatedConvolver,
    n: usize,
    m: usize,
    mean_log: f64,
}

impl ElwObjective {
    pub fn new(x: &[f64], m: usize) -> Result<Self> {
        let n = x.len();
        if m < 1 || m > n.saturating_sub(1) / 2 {
            return Err(Error::Bandwidth { m, n });
        }
        let x0 = x[0];
        let centred: Vec<f64> = x.iter().map(|v| v - x0).collect();
        Ok(Self { conv: TruncatedConvolver::new(&centred), n, m, mean_log: mean_log_freq(n, m) })
    }

    pub fn eval(&self, d: f64) -> f64 {
        let diffed = self.conv.apply(&frac_coeffs(-d, self.n - 1));
        let ordinates = periodogram_upto(&diffed, self.m);
        let mean = ordinates.iter().sum::<f64>() / self.m as f64;
        mean.ln() - 2.0 * d * self.mean_log
    }
}

/// Exact local Whittle estimate of `d` with `m = ⌊n^b⌋`, searched on
/// `[−0.5, 2.0]`.
pub fn elw_estimate(x: &[f64], b: f64) -> Result<MemoryEstimate> {
    let m = check_input(x, b)?;
    let obj = ElwObjective::new(x, m)?;
    let (d_hat, value) = grid_then_golden(&mut |d| obj.eval(d), ELW_INTERVAL.0, ELW_INTERVAL.1);
    Ok(MemoryEstimate {
        d_hat,
        method: MemoryMethod::Elw,
        bandwidth_m: m,
        bandwidth_exponent_b: b,
        objective_at_opt: value,
    })
}

/// Dispatches to [`lw_estimate`] or [`elw_estimate`].
pub fn estimate(method: MemoryMethod, x: &[f64], b: f64) -> Result<MemoryEstimate> {
    match method {
        MemoryMethod::Lw => lw_estimate(x, b),
        MemoryMethod::Elw => elw_estimate(x, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::gen_fractional;
    use crate::stream::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn naive_periodogram(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=(n - 1) / 2)
            .map(|j| {
                let lam = 2.0 * PI * j as f64 / n as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (k, v) in x.iter().enumerate() {
                    re += v * (lam * (k + 1) as f64).cos();
                    im -= v * (lam * (k + 1) as f64).sin();
                }
                (re * re + im * im) / (2.0 * PI * n as f64)
            })
            .collect()
    }

    #[test]
    fn periodogram_matches_naive_dft() {
        for n in [32, 33] {
            let x = normals(n, 5);
            let fast = periodogram(&x).unwrap();
            let slow = naive_periodogram(&x);
            assert_eq!(fast.len(), (n - 1) / 2);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn periodogram_of_constant_vanishes() {
        let p = periodogram(&[3.0; 40]).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn periodogram_single_tone() {
        let n = 128;
        let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * (k * 9) as f64 / n as f64).cos()).collect();
        let p = periodogram(&x).unwrap();
        let peak = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 + 1;
        assert_eq!(peak, 9);
        assert!(periodogram(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn frac_diff_special_cases() {
        let x = [1.0, 4.0, 2.0, 7.0];
        assert_eq!(frac_diff(&x, 0.0), x.to_vec());
        assert_eq!(frac_diff(&x, 1.0), vec![1.0, 3.0, -2.0, 5.0]);
    }

    #[test]
    fn frac_diff_inverts_fractional_generation() {
        for n in [256, 1000] {
            let xi = normals(n, 8);
            let x = gen_fractional(0.7, &xi).unwrap();
            let back = frac_diff(&x, 0.7);
            let err = back.iter().zip(&xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n}: {err}");
        }
    }

    #[test]
    fn bandwidth_rules() {
        assert_eq!(bandwidth(4096, 0.65).unwrap(), 222);
        assert!(matches!(bandwidth(64, 0.3), Err(Error::Bandwidth { m: 3, n: 64 })));
        assert!(lw_estimate(&normals(63, 1), 0.65).is_err());
    }

    #[test]
    fn lw_scale_invariance() {
        let x = gen_fractional(0.3, &normals(1024, 11)).unwrap();
        let y: Vec<f64> = x.iter().map(|v| 10.0 * v).collect();
        let a = lw_estimate(&x, 0.65).unwrap();
        let b = lw_estimate(&y, 0.65).unwrap();
        assert!((a.d_hat - b.d_hat).abs() < 1e-6);
        assert!((b.objective_at_opt - a.objective_at_opt - 100f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn optimum_is_a_grid_local_minimum() {
        let x = gen_fractional(0.45, &normals(2048, 12)).unwrap();
        let e = lw_estimate(&x, 0.6).unwrap();
        let obj = LwObjective::new(&x, e.bandwidth_m).unwrap();
        let h = 1.0 / 300.0;
        assert!(e.objective_at_opt <= obj.eval(e.d_hat - h));
        assert!(e.objective_at_opt <= obj.eval(e.d_hat + h));
        assert!(e.d_hat >= LW_INTERVAL.0 && e.d_hat <= LW_INTERVAL.1);
    }

    #[test]
    fn elw_objective_uses_fft_filter_consistently() {
        let x = gen_fractional(0.9, &normals(300, 13)).unwrap();
        let obj = ElwObjective::new(&x, 20).unwrap();
        let centred: Vec<f64> = x.iter().map(|v| v - x[0]).collect();
        for d in [-0.3, 0.4, 1.0, 1.7] {
            let direct = filter::convolve_direct(&frac_coeffs(-d, 299), &centred);
            let p = naive_periodogram(&direct);
            let r = (p[..20].iter().sum::<f64>() / 20.0).ln() - 2.0 * d * mean_log_freq(300, 20);
            assert!((obj.eval(d) - r).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn single_path_estimates_are_sensible() {
        let x = gen_fractional(1.0, &normals(4096, 14)).unwrap();
        let lw = lw_estimate(&x, 0.65).unwrap();
        let elw = elw_estimate(&x, 0.65).unwrap();
        assert!((lw.d_hat - 1.0).abs() < 0.2, "lw {}", lw.d_hat);
        assert!((elw.d_hat - 1.0).abs() < 0.2, "elw {}", elw.d_hat);
        assert_eq!(elw.method, MemoryMethod::Elw);
    }
}
