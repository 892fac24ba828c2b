//! Strictly stable variates by the Chambers–Mallows–Stuck construction.
//!
//! Two normalisations are used throughout the crate:
//! * symmetric: `E[exp(izS)] = exp(-|z|^α)`, α ∈ (0, 2];
//! * one-sided: `E[exp(-λS)] = exp(-λ^α)`, α ∈ (0, 1).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};

use crate::error::{IdtError, Result};

pub fn check_symmetric_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(IdtError::BadStableIndex { alpha, range: "(0, 2]" })
    }
}

pub fn check_one_sided_index(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(IdtError::BadStableIndex { alpha, range: "(0, 1)" })
    }
}

/// Symmetric α-stable draw with characteristic function `exp(-|z|^α)`.
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive α-stable draw with Laplace transform `exp(-λ^α)` (Kanter's form of CMS with β = 1).
pub fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let u = PI * u;
    let w: f64 = Exp1.sample(rng);
    (alpha * u).sin() / u.sin().powf(1.0 / alpha) * (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha)
}

/// `log E[exp(izS)]` for the symmetric normalisation.
pub fn symmetric_log_cf(alpha: f64, z: f64) -> Complex64 {
    Complex64::new(-z.abs().powf(alpha), 0.0)
}

/// `log E[exp(izS)]` for the one-sided normalisation: `-(−iz)^α`.
pub fn positive_log_cf(alpha: f64, z: f64) -> Complex64 {
    if z == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let phase = -FRAC_PI_2 * alpha * z.signum();
    -z.abs().powf(alpha) * Complex64::from_polar(1.0, phase)
}
