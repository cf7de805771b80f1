//! Normal quantiles and a one-sample Kolmogorov–Smirnov test.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Two-sided critical value `Φ⁻¹(1 − level/2)`.
pub fn two_sided_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(domain(format!("level must lie in (0, 1), got {level}")));
    }
    Ok(standard_normal().inverse_cdf(1.0 - level / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov–Smirnov test of `sample` against `cdf`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if sample.is_empty() || sample.iter().any(|v| !v.is_finite()) {
        return Err(domain("KS test needs a nonempty finite sample"));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    // Stephens' small-sample adjustment of the argument.
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda), n: s.len() })
}

/// `P(K > λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((two_sided_critical(0.05).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((two_sided_critical(0.01).unwrap() - 2.575_829_303_548_901).abs() < 1e-9);
        assert!(two_sided_critical(0.0).is_err());
    }

    #[test]
    fn kolmogorov_quantiles() {
        assert!((kolmogorov_survival(1.358_098_8) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_survival(1.627_624) - 0.01).abs() < 1e-6);
    }

    #[test]
    fn ks_statistic_by_hand() {
        // uniform cdf on [0,1]: D = max(1/3 − 0.1, 2/3 − 0.5, 1 − 0.9, 0.5 − 1/3, 0.9 − 2/3)
        let r = ks_test(&[0.9, 0.1, 0.5], |x| x).unwrap();
        assert!((r.statistic - (0.9 - 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn shifted_sample_is_rejected() {
        let sample: Vec<f64> = (1..=500).map(|i| 0.5 + 3.0 * (i as f64 / 501.0 - 0.5)).collect();
        assert!(ks_test(&sample, normal_cdf).unwrap().p_value < 0.01);
    }
}
