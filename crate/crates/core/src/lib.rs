//! Processes that are infinitely divisible with respect to time (IDT).
//!
//! A process `X` is IDT when, for every integer `n`, the whole path
//! `(X_{nt})_t` has the law of `(X^{(1)}_t + … + X^{(n)}_t)_t` for independent
//! copies of `X`. The crate provides
//!
//! * [`process_models`]: Lévy triplets, exponents and seeded samplers;
//! * [`constructions`]: the IDT recipes (stable rays, integral and jump
//!   transforms, Gaussian kernel integrals);
//! * [`spectral`]: covariance, Lamperti and spectral analytics for the
//!   Gaussian family;
//! * [`measures`]: Lévy-measure transforms, scalar and on path space;
//! * [`verify`]: empirical characteristic functions and the hypothesis tests
//!   built on them.
//!
//! Monte Carlo work is data-parallel over paths (rayon, `parallel` feature) and
//! bit-reproducible for any worker count.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod constructions;
pub mod error;
pub mod fmt;
pub mod measures;
pub mod parallel;
pub mod process_models;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod verify;

pub use error::{IdtError, Result};
pub use rng::SeedInfo;
