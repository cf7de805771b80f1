//! Tuning rules for the three kernel/cp configurations used in the
//! simulations and the application.

use serde::{Deserialize, Serialize};

use super::prelim::PrelimStats;
use crate::error::{domain, Error, Result};
use crate::kernels::{Demeaning, KernelSpec, TrimmingScheme};

/// Which intercept-correction vector enters the studentization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Studentization {
    /// `𝒜_n = [1, −Σ f_k K_kn / Σ K*_kn]`
    Standard,
    /// `𝒜*_n = [1, −Σ f_k K*_kn / Σ K*_kn]`
    Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetupId {
    /// `c_n = n^0.95`, `l_n = ⌊c_n^0.7⌋`, multi-cp demeaning.
    S1,
    /// As S1 with `l_n = ⌊c_n^α̂⌋`, `α̂ = 1 − 0.45|δ̃|`.
    S2,
    /// Data-driven kernel variance and rate, `l_n = ⌊ln n⌋`, single cp at 0.5.
    S3,
    Custom {
        scheme: TrimmingScheme,
        variant: Studentization,
    },
}

impl SetupId {
    pub fn label(&self) -> &'static str {
        match self {
            SetupId::S1 => "S1",
            SetupId::S2 => "S2",
            SetupId::S3 => "S3",
            SetupId::Custom { .. } => "custom",
        }
    }
}

/// Kernel variances for S1/S2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelScaling {
    /// `K = φ_{0.1}^{1/2}`, `K* = φ_1^{1/2}`.
    #[default]
    Fixed,
    /// `K = φ_{0.1 σ̃_u²}^{1/2}`, `K* = φ_{σ̃_u²}^{1/2}`, used on market data.
    ResidualScaled,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSetup {
    pub scheme: TrimmingScheme,
    pub variant: Studentization,
    /// Data-driven exponent, when the setup has one.
    pub alpha_hat: Option<f64>,
    pub warnings: Vec<String>,
}

fn floor_count(v: f64, warnings: &mut Vec<String>) -> usize {
    let l = if v.is_finite() && v >= 1.0 { v.floor() as usize } else { 0 };
    if l == 0 {
        warnings.push(format!("l_n resolved to {v:.4}; clamped to 1"));
        1
    } else {
        l
    }
}

/// Realizes `id` for a sample of size `n` given the preliminary statistics.
pub fn resolve_setup(id: &SetupId, n: usize, prelim: &PrelimStats, scaling: KernelScaling) -> Result<ResolvedSetup> {
    if n < 8 {
        return Err(domain(format!("setups need n >= 8, got {n}")));
    }
    let nf = n as f64;
    let abs_delta = prelim.delta_tilde.abs();
    let mut warnings = Vec::new();

    let multi_kernels = || -> Result<(KernelSpec, KernelSpec)> {
        let s = match scaling {
            KernelScaling::Fixed => 1.0,
            KernelScaling::ResidualScaled => prelim.sigma_u2,
        };
        if !(s > 0.0) {
            return Err(Error::DegenerateStudentization("residual variance is zero; cannot scale kernels".into()));
        }
        Ok((KernelSpec::gaussian_power(0.1 * s, 0.5)?, KernelSpec::gaussian_power(s, 0.5)?))
    };

    match id {
        SetupId::S1 | SetupId::S2 => {
            let c_n = nf.powf(0.95);
            let alpha = match id {
                SetupId::S1 => 0.7,
                _ => 1.0 - 0.45 * abs_delta,
            };
            let l_n = floor_count(c_n.powf(alpha), &mut warnings);
            let (k, ks) = multi_kernels()?;
            Ok(ResolvedSetup {
                scheme: TrimmingScheme::new(c_n, l_n, Demeaning::MultiCp, k, ks)?,
                variant: Studentization::Standard,
                alpha_hat: matches!(id, SetupId::S2).then_some(alpha),
                warnings,
            })
        }
        SetupId::S3 => {
            let variance = prelim.sigma_u2 * (0.1 + 0.9 * abs_delta);
            if !(variance > 0.0) {
                return Err(Error::DegenerateStudentization(
                    "residual variance is zero; S3 kernel variance undefined".into(),
                ));
            }
            let alpha = -0.1 + 0.15 * abs_delta;
            let c_n = nf.powf(alpha);
            let l_n = floor_count(nf.ln(), &mut warnings);
            Ok(ResolvedSetup {
                scheme: TrimmingScheme::new(
                    c_n,
                    l_n,
                    Demeaning::SingleCp { tau_star: 0.5 },
                    KernelSpec::gaussian(variance)?,
                    KernelSpec::gaussian_power(variance, 0.5)?,
                )?,
                variant: Studentization::Star,
                alpha_hat: Some(alpha),
                warnings,
            })
        }
        SetupId::Custom { scheme, variant } => {
            Ok(ResolvedSetup { scheme: scheme.clone(), variant: *variant, alpha_hat: None, warnings })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prelim(delta: f64, sigma_u2: f64) -> PrelimStats {
        PrelimStats {
            beta_tilde: 0.0,
            rho_tilde: 1.0,
            sigma_u2,
            sigma_xi2: 1.0,
            delta_tilde: delta,
            degenerate: false,
            residuals_u: vec![],
            residuals_xi: vec![],
        }
    }

    #[test]
    fn s1_at_250() {
        let r = resolve_setup(&SetupId::S1, 250, &prelim(0.3, 1.0), KernelScaling::Fixed).unwrap();
        assert!((r.scheme.c_n() - 189.689_376_154_339_84).abs() < 1e-9);
        assert_eq!(r.scheme.l_n(), 39);
        assert_eq!(r.scheme.l_star(), 39);
        assert_eq!(r.variant, Studentization::Standard);
        assert_eq!(*r.scheme.kernel(), KernelSpec::GaussianDensityPower { variance: 0.1, power: 0.5 });
        assert_eq!(*r.scheme.kernel_star(), KernelSpec::GaussianDensityPower { variance: 1.0, power: 0.5 });
    }

    #[test]
    fn s1_counts_at_table_sizes() {
        for (n, l) in [(500, 62), (750, 81), (1000, 98)] {
            let r = resolve_setup(&SetupId::S1, n, &prelim(0.0, 1.0), KernelScaling::Fixed).unwrap();
            assert_eq!(r.scheme.l_n(), l, "n = {n}");
        }
    }

    #[test]
    fn s2_shrinks_cp_count_with_endogeneity() {
        let weak = resolve_setup(&SetupId::S2, 250, &prelim(0.0, 1.0), KernelScaling::Fixed).unwrap();
        let strong = resolve_setup(&SetupId::S2, 250, &prelim(-0.95, 1.0), KernelScaling::Fixed).unwrap();
        // α̂ = 1 gives l_n = ⌊c_n⌋
        assert_eq!(weak.scheme.l_n(), 189);
        assert!((strong.alpha_hat.unwrap() - 0.5725).abs() < 1e-12);
        assert_eq!(strong.scheme.l_n(), 189.689_376_154_339_84f64.powf(0.5725).floor() as usize);
    }

    #[test]
    fn s3_vanishing_rate_without_endogeneity() {
        let r = resolve_setup(&SetupId::S3, 250, &prelim(0.0, 2.0), KernelScaling::Fixed).unwrap();
        assert!((r.alpha_hat.unwrap() + 0.1).abs() < 1e-15);
        assert!((r.scheme.c_n() - 250f64.powf(-0.1)).abs() < 1e-15);
        assert!(r.scheme.c_n() < 1.0);
        assert_eq!(r.scheme.l_n(), 5);
        assert_eq!(r.scheme.l_star(), 1);
        assert_eq!(r.scheme.tau_star(), Some(0.5));
        assert_eq!(*r.scheme.kernel(), KernelSpec::GaussianDensityPower { variance: 0.2, power: 1.0 });
        assert_eq!(r.variant, Studentization::Star);
    }

    #[test]
    fn s3_needs_positive_residual_variance() {
        assert!(matches!(
            resolve_setup(&SetupId::S3, 100, &prelim(0.0, 0.0), KernelScaling::Fixed),
            Err(Error::DegenerateStudentization(_))
        ));
    }

    #[test]
    fn residual_scaled_kernels() {
        let r = resolve_setup(&SetupId::S1, 300, &prelim(0.2, 4.0), KernelScaling::ResidualScaled).unwrap();
        assert_eq!(*r.scheme.kernel(), KernelSpec::GaussianDensityPower { variance: 0.4, power: 0.5 });
        assert_eq!(*r.scheme.kernel_star(), KernelSpec::GaussianDensityPower { variance: 4.0, power: 0.5 });
    }

    #[test]
    fn tiny_samples_are_rejected() {
        assert!(resolve_setup(&SetupId::S1, 7, &prelim(0.0, 1.0), KernelScaling::Fixed).is_err());
    }

    #[test]
    fn cp_count_is_clamped() {
        let mut w = Vec::new();
        assert_eq!(floor_count(0.4, &mut w), 1);
        assert_eq!(w.len(), 1);
    }
}
