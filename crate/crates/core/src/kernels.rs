//! Kernel functions and chronological trimming weights.
//!
//! The instrument weight of observation `k` (1-based) in a sample of size `n` is
//!
//! ```text
//! K_kn = Σ_j K(c_n (k/n − τ_j)),   τ_j = j / (l_n + 1),  j = 1..l_n
//! ```
//!
//! and the demeaning weight `K*_kn` is either the same sum with a second kernel
//! `K*` (multi-cp demeaning) or a single term `K*(c_n (k/n − τ*))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A nonnegative kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `φ_{ς²}(x)^p` where `φ_{ς²}` is the `N(0, ς²)` density.
    GaussianDensityPower { variance: f64, power: f64 },
    /// Constant everywhere. Not integrable; it turns LTLS into OLS and exists
    /// for algebraic checks.
    ConstantOnAll { level: f64 },
}

impl KernelSpec {
    /// `φ_{ς²}(x)^p`, validated.
    pub fn gaussian_power(variance: f64, power: f64) -> Result<Self> {
        let k = KernelSpec::GaussianDensityPower { variance, power };
        k.validate()?;
        Ok(k)
    }

    /// The plain `N(0, ς²)` density.
    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::gaussian_power(variance, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::GaussianDensityPower { variance, power } => {
                if !(variance.is_finite() && variance > 0.0) {
                    return Err(domain(format!("kernel variance must be positive, got {variance}")));
                }
                if !(power > 0.0 && power <= 1.0) {
                    return Err(domain(format!("kernel power must lie in (0, 1], got {power}")));
                }
                Ok(())
            }
            KernelSpec::ConstantOnAll { level } => {
                if !(level.is_finite() && level > 0.0) {
                    return Err(domain(format!("constant kernel level must be positive, got {level}")));
                }
                Ok(())
            }
        }
    }

    /// Precomputes the constants needed for repeated evaluation.
    pub(crate) fn evaluator(&self) -> KernelEval {
        match *self {
            KernelSpec::GaussianDensityPower { variance, power } => {
                KernelEval { scale: (2.0 * PI * variance).powf(-0.5 * power), rate: power / (2.0 * variance) }
            }
            KernelSpec::ConstantOnAll { level } => KernelEval { scale: level, rate: 0.0 },
        }
    }

    /// Kernel value at `x`. Non-finite input is a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(domain(format!("kernel argument must be finite, got {x}")));
        }
        Ok(self.evaluator().at(x))
    }

    /// Closed-form `(∫K, ∫K²)`.
    ///
    /// For `K = φ_{ς²}^p`, `∫K = (2πς²)^{(1−p)/2} p^{−1/2}`, and `∫K²` is the same
    /// expression with `2p` in place of `p`.
    pub fn integrals(&self) -> Result<(f64, f64)> {
        match *self {
            KernelSpec::GaussianDensityPower { variance, power } => {
                self.validate()?;
                let int_pow = |p: f64| (2.0 * PI * variance).powf(0.5 * (1.0 - p)) / p.sqrt();
                Ok((int_pow(power), int_pow(2.0 * power)))
            }
            KernelSpec::ConstantOnAll { .. } => {
                Err(Error::NotIntegrable("constant kernel has infinite integral".into()))
            }
        }
    }

    /// `∫ K(x) K2(x) dx` for two Gaussian-density powers.
    pub fn cross_integral(&self, other: &KernelSpec) -> Result<f64> {
        match (self, other) {
            (KernelSpec::GaussianDensityPower { .. }, KernelSpec::GaussianDensityPower { .. }) => {
                self.validate()?;
                other.validate()?;
                let (a, b) = (self.evaluator(), other.evaluator());
                // ∫ s1 s2 exp(−(r1 + r2) x²) dx
                Ok(a.scale * b.scale * (PI / (a.rate + b.rate)).sqrt())
            }
            _ => Err(Error::NotIntegrable("cross integral needs two Gaussian kernels".into())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelEval {
    scale: f64,
    rate: f64,
}

impl KernelEval {
    #[inline]
    pub(crate) fn at(&self, x: f64) -> f64 {
        if self.rate == 0.0 {
            self.scale
        } else {
            self.scale * (-self.rate * x * x).exp()
        }
    }
}

/// Equispaced chronological points `[1/(l+1), …, l/(l+1)]`.
pub fn make_cps(l: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(domain("number of chronological points must be at least 1"));
    }
    let denom = (l + 1) as f64;
    Ok((1..=l).map(|j| j as f64 / denom).collect())
}

/// How the demeaning weights `K*_kn` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Demeaning {
    /// `K*_kn = Σ_j K*(c_n(k/n − τ_j))` over the instrument cps (`l* = l_n`).
    MultiCp,
    /// `K*_kn = K*(c_n(k/n − τ*))` (`l* = 1`).
    SingleCp { tau_star: f64 },
}

/// Realized trimming configuration for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimmingScheme {
    cps: Vec<f64>,
    c_n: f64,
    demeaning: Demeaning,
    kernel: KernelSpec,
    kernel_star: KernelSpec,
}

impl TrimmingScheme {
    pub fn new(
        c_n: f64,
        l_n: usize,
        demeaning: Demeaning,
        kernel: KernelSpec,
        kernel_star: KernelSpec,
    ) -> Result<Self> {
        if !(c_n.is_finite() && c_n > 0.0) {
            return Err(domain(format!("c_n must be positive, got {c_n}")));
        }
        if let Demeaning::SingleCp { tau_star } = demeaning {
            if !(tau_star > 0.0 && tau_star < 1.0) {
                return Err(domain(format!("tau* must lie in (0, 1), got {tau_star}")));
            }
        }
        kernel.validate()?;
        kernel_star.validate()?;
        Ok(Self { cps: make_cps(l_n)?, c_n, demeaning, kernel, kernel_star })
    }

    pub fn cps(&self) -> &[f64] {
        &self.cps
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn l_n(&self) -> usize {
        self.cps.len()
    }

    /// `l*_n`: `l_n` for multi-cp demeaning, 1 for single-cp.
    pub fn l_star(&self) -> usize {
        match self.demeaning {
            Demeaning::MultiCp => self.l_n(),
            Demeaning::SingleCp { .. } => 1,
        }
    }

    pub fn tau_star(&self) -> Option<f64> {
        match self.demeaning {
            Demeaning::MultiCp => None,
            Demeaning::SingleCp { tau_star } => Some(tau_star),
        }
    }

    pub fn demeaning(&self) -> Demeaning {
        self.demeaning
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn kernel_star(&self) -> &KernelSpec {
        &self.kernel_star
    }

    /// `λ_n = n l_n / c_n`, the order of `Σ_k K_kn`.
    pub fn lambda(&self, n: usize) -> f64 {
        n as f64 * self.l_n() as f64 / self.c_n
    }

    /// `λ*_n = n l*_n / c_n`, the order of `Σ_k K*_kn`.
    pub fn lambda_star(&self, n: usize) -> f64 {
        n as f64 * self.l_star() as f64 / self.c_n
    }
}

/// Instrument and demeaning weights for `k = 1..n` (returned 0-indexed).
pub fn trimming_weights(scheme: &TrimmingScheme, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(domain(format!("sample size must be at least 2, got {n}")));
    }
    let kernel = scheme.kernel.evaluator();
    let kernel_star = scheme.kernel_star.evaluator();
    let c = scheme.c_n;
    let nf = n as f64;

    let mut k_kn = vec![0.0; n];
    let mut k_star = vec![0.0; n];
    for (i, (w, ws)) in k_kn.iter_mut().zip(k_star.iter_mut()).enumerate() {
        let t = (i + 1) as f64 / nf;
        let mut acc = 0.0;
        let mut acc_star = 0.0;
        for &tau in &scheme.cps {
            let arg = c * (t - tau);
            acc += kernel.at(arg);
            if scheme.demeaning == Demeaning::MultiCp {
                acc_star += kernel_star.at(arg);
            }
        }
        if let Demeaning::SingleCp { tau_star } = scheme.demeaning {
            acc_star = kernel_star.at(c * (t - tau_star));
        }
        *w = acc;
        *ws = acc_star;
    }

    if !k_kn.iter().any(|&w| w > 0.0) {
        return Err(Error::DegenerateWeights("all instrument weights are zero".into()));
    }
    if !k_star.iter().any(|&w| w > 0.0) {
        return Err(Error::DegenerateWeights("all demeaning weights are zero".into()));
    }
    Ok((k_kn, k_star))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: f64, p: f64) -> KernelSpec {
        KernelSpec::gaussian_power(v, p).unwrap()
    }

    #[test]
    fn standard_normal_at_mode() {
        let k = g(1.0, 1.0);
        assert!((k.eval(0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(k.eval(-2.0).unwrap(), k.eval(2.0).unwrap());
    }

    #[test]
    fn half_power_narrow_kernel_at_mode() {
        // (1/√(0.2π))^{1/2}
        let expected = (1.0 / (0.2 * PI).sqrt()).sqrt();
        let got = g(0.1, 0.5).eval(0.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 1.123_194_667_459_777_5).abs() < 1e-12);
    }

    #[test]
    fn non_finite_argument_is_rejected() {
        assert!(matches!(g(1.0, 1.0).eval(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(g(1.0, 1.0).eval(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(KernelSpec::gaussian_power(0.0, 1.0).is_err());
        assert!(KernelSpec::gaussian_power(1.0, 0.0).is_err());
        assert!(KernelSpec::gaussian_power(1.0, 1.5).is_err());
    }

    #[test]
    fn integrals_of_standard_normal() {
        let (ik, ik2) = g(1.0, 1.0).integrals().unwrap();
        assert!((ik - 1.0).abs() < 1e-15);
        assert!((ik2 - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn integral_of_squared_wide_kernel() {
        let (_, ik2) = g(4.0, 1.0).integrals().unwrap();
        assert!((ik2 - 0.141_047_395_886_939_07).abs() < 1e-12);
    }

    /// Composite Simpson rule on [−L, L]; independent of the closed form.
    fn simpson(f: impl Fn(f64) -> f64, half_width: f64, panels: usize) -> f64 {
        let h = 2.0 * half_width / panels as f64;
        let mut s = f(-half_width) + f(half_width);
        for i in 1..panels {
            let x = -half_width + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        // Values frozen from adaptive quadrature (scipy.integrate.quad, 1e-14).
        let frozen = [
            (0.1, 0.5, 1.259_099_249_083_409_2, 1.0),
            (1.0, 0.5, 2.239_030_269_840_495_4, 1.0),
            (2.5, 1.0, 1.0, 0.178_412_411_615_277_13),
            (0.3, 0.7, 1.314_456_288_467_460_4, 0.744_518_952_330_595),
        ];
        for (v, p, ik_q, ik2_q) in frozen {
            let k = g(v, p);
            let (ik, ik2) = k.integrals().unwrap();
            assert!((ik - ik_q).abs() < 1e-8, "∫K for ({v},{p}): {ik} vs {ik_q}");
            assert!((ik2 - ik2_q).abs() < 1e-8, "∫K² for ({v},{p}): {ik2} vs {ik2_q}");
            let eval = k.evaluator();
            let s = simpson(|x| eval.at(x), 40.0, 20_000);
            assert!((ik - s).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_integral_matches_quadrature() {
        let a = g(0.1, 0.5);
        let b = g(1.0, 0.5);
        let (ea, eb) = (a.evaluator(), b.evaluator());
        let s = simpson(|x| ea.at(x) * eb.at(x), 40.0, 20_000);
        assert!((a.cross_integral(&b).unwrap() - s).abs() < 1e-9);
        let (_, ik2) = a.integrals().unwrap();
        assert!((a.cross_integral(&a).unwrap() - ik2).abs() < 1e-12);
    }

    #[test]
    fn constant_kernel_is_not_integrable() {
        let k = KernelSpec::ConstantOnAll { level: 1.0 };
        assert!(matches!(k.integrals(), Err(Error::NotIntegrable(_))));
        assert_eq!(k.eval(123.0).unwrap(), 1.0);
    }

    #[test]
    fn cps_grid() {
        assert_eq!(make_cps(1).unwrap(), vec![0.5]);
        assert_eq!(make_cps(3).unwrap(), vec![0.25, 0.5, 0.75]);
        assert_eq!(make_cps(4).unwrap(), vec![0.2, 0.4, 0.6, 0.8]);
        assert!(make_cps(0).is_err());
    }

    #[test]
    fn single_cp_weight_at_mode() {
        let s = TrimmingScheme::new(1.0, 1, Demeaning::MultiCp, g(1.0, 1.0), g(1.0, 1.0)).unwrap();
        let (w, _) = trimming_weights(&s, 4).unwrap();
        assert!((w[1] - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn constant_kernels_give_constant_weights() {
        let c = KernelSpec::ConstantOnAll { level: 1.0 };
        let multi = TrimmingScheme::new(3.0, 5, Demeaning::MultiCp, c, c).unwrap();
        let (w, ws) = trimming_weights(&multi, 17).unwrap();
        assert!(w.iter().all(|&x| x == 5.0));
        assert!(ws.iter().all(|&x| x == 5.0));
        let single = TrimmingScheme::new(3.0, 5, Demeaning::SingleCp { tau_star: 0.5 }, c, c).unwrap();
        let (_, ws) = trimming_weights(&single, 17).unwrap();
        assert!(ws.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn weights_match_double_loop_oracle() {
        let s = TrimmingScheme::new(5.0, 2, Demeaning::MultiCp, g(1.0, 1.0), g(1.0, 1.0)).unwrap();
        let (w, ws) = trimming_weights(&s, 10).unwrap();
        // Frozen from a direct double loop over k and τ_j ∈ {1/3, 2/3}.
        let frozen = [
            0.209_204_785_318_668_15,
            0.345_669_894_616_061_85,
            0.467_750_879_660_933_04,
            0.541_393_302_368_987,
            0.563_823_750_820_605_2,
            0.541_393_302_368_986_9,
            0.467_750_879_660_933_04,
            0.345_669_894_616_061_6,
            0.209_204_785_318_668_07,
            0.101_019_417_789_039_75,
        ];
        for k in 0..10 {
            assert!((w[k] - frozen[k]).abs() < 1e-12);
            assert!((ws[k] - frozen[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_weights_are_reported() {
        // A very narrow kernel far from every grid point underflows to zero.
        let s = TrimmingScheme::new(1e6, 1, Demeaning::MultiCp, g(1e-4, 1.0), g(1.0, 1.0)).unwrap();
        assert!(matches!(trimming_weights(&s, 3), Err(Error::DegenerateWeights(_))));
    }

    #[test]
    fn scheme_validation() {
        let k = g(1.0, 1.0);
        assert!(TrimmingScheme::new(0.0, 1, Demeaning::MultiCp, k, k).is_err());
        assert!(TrimmingScheme::new(1.0, 0, Demeaning::MultiCp, k, k).is_err());
        assert!(TrimmingScheme::new(1.0, 1, Demeaning::SingleCp { tau_star: 1.0 }, k, k).is_err());
        let s = TrimmingScheme::new(0.5, 3, Demeaning::SingleCp { tau_star: 0.5 }, k, k).unwrap();
        assert_eq!((s.l_n(), s.l_star(), s.tau_star()), (3, 1, Some(0.5)));
        assert!((s.lambda(100) - 600.0).abs() < 1e-12);
        assert!((s.lambda_star(100) - 200.0).abs() < 1e-12);
    }
}
