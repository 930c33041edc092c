//! The Generalised Score Distribution (GSD): a two-parameter family on the
//! ordinal scale `{1, ..., M}` parameterised by its mean `psi` and a
//! confidence parameter `rho` that moves the variance linearly between the
//! smallest and largest variance attainable at that mean.
//!
//! The crate is `no_std` (it needs `alloc`). Randomness always enters
//! through an explicit `u64` seed; every replicate of a bootstrap or a
//! simulation study draws from its own ChaCha stream, so results do not
//! depend on evaluation order.
//!
//! Module map:
//!
//! * [`envelope`], [`dist`], [`latent`]: probabilities, moments, sampling
//!   and the sum-of-Bernoulli representation.
//! * [`estimate`]: moments, grid, gradient and constrained estimators.
//! * [`gof`]: bootstrapped G-test and P-P plot data.
//! * [`probit`]: ordered probit with fixed thresholds.
//! * [`compare`]: resampling comparison of a fitted GSD against the EPMF.
//! * [`matrix`]: rater/stimulus model and its block-coordinate MLE.
//! * [`study`]: RMSD simulation studies.

#![no_std]

extern crate alloc;

pub mod compare;
pub mod dist;
pub mod envelope;
mod error;
pub mod estimate;
pub mod gof;
pub mod latent;
mod math;
pub mod matrix;
mod params;
pub mod probit;
pub mod rng;
mod sample;
pub mod study;
mod table;

pub use crate::error::{GsdError, Result};
pub use crate::params::{GsdParams, Pmf};
pub use crate::sample::CountSample;

/// Distance from an integer below which `psi` is treated as that integer.
pub const INTEGER_TOL: f64 = 1e-12;
