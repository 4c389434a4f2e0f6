//! Numerical core for estimating, testing and comparing heavy-tailed
//! distributions on firm-level productivity data.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains no IO. It covers:
//!
//! - [`stable`]: the Lévy alpha-stable law in Nolan's S0 parameterization
//!   (characteristic function, density, CDF, quantiles, sampling, tails).
//! - [`estimators`]: McCulloch's quantile estimator on a generated lookup
//!   grid, maximum likelihood refinement and bootstrap standard errors.
//! - [`aep`]: the four-parameter asymmetric exponential power (Subbotin)
//!   reference model with L-moment fitting.
//! - [`gof`]: Soofi information distinguishability, AIC and K-fold
//!   cross-validation.
//! - [`moment_test`]: Trapani's randomized test for infinite moments.
//! - [`scaling`]: sample standard deviation versus sample size.
//! - [`panel`]: cleaning, variable construction, grouping and dispersion
//!   metrics for firm-year panels.
//!
//! ```
//! use stablefit_core::stable::{self, StableParams};
//!
//! let cauchy = StableParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
//! assert!((stable::cdf(&cauchy, 1.0).unwrap() - 0.75).abs() < 1e-12);
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod aep;
pub mod error;
pub mod estimators;
pub mod gof;
pub mod optim;
pub mod panel;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod scaling;
pub mod special;
pub mod spline;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
