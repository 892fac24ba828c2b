//! Lévy process primitives: triplets, characteristic exponents and seeded
//! path samplers, plus the squared Bessel process used as a negative control.

mod grid;
mod sampling;
pub mod stable;
mod triplet;

pub use grid::{PathEnsemble, SamplePath, TimeGrid};
pub use sampling::{sample_besq1, sample_levy};
pub use triplet::{JumpDist, JumpPart, LevyTriplet};

use num_complex::Complex64;

use crate::error::Result;

/// `ψ(z)` with `E[exp(izX_t)] = exp(tψ(z))`.
pub fn char_exponent(triplet: &LevyTriplet, z: f64) -> Result<Complex64> {
    triplet.char_exponent(z)
}
