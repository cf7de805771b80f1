//! Locally trimmed least squares (LTLS) inference for predictive regressions
//! whose regressor may be stationary, near-integrated or fractionally
//! integrated.
//!
//! ```
//! use ltls::dgp::{gen_series, DgpSpec, Regressor};
//! use ltls::ltls::{LtlsTest, SetupId};
//! use ltls::stream::seeded;
//!
//! let spec = DgpSpec {
//!     delta: -0.95,
//!     regressor: Regressor::NearIntegrated { c: 0.0 },
//!     beta: 0.0,
//!     mu: 0.0,
//!     n: 250,
//! };
//! let sample = gen_series(&spec, &mut seeded(1)).unwrap();
//! let res = LtlsTest::new(SetupId::S3).run(&sample.y, &sample.x).unwrap();
//! assert!(res.t_stat.is_finite());
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod application;
pub mod baselines;
pub mod dgp;
pub mod error;
mod filter;
pub mod kernels;
pub mod ltls;
pub mod memory;
pub mod montecarlo;
mod ols;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use filter::{frac_difference, frac_integrate};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/setups.md")]
    mod setups {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/application.md")]
    mod application {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
