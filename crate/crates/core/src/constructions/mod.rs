//! The four recipes for IDT processes: stable rays, measure-integral
//! transforms, jump transforms and Gaussian kernel integrals.

mod gaussian;
mod kernel;
mod radial;
mod sampler;
mod transform;

use std::sync::Arc;

pub use gaussian::{gaussian_exact, gaussian_phi_path, gram_matrix, psd_factor, PhiPathScheme};
pub use kernel::{KernelQuad, KernelShape, PhiKernel};
pub use radial::RadialMeasure;
pub use sampler::{ConstructionSpec, PathSampler};
pub use transform::{
    integral_transform, integral_transform_with, jump_transform, JumpFunctional, JumpFunctionalSpec,
    DEFAULT_TRANSFORM_NODES,
};

use crate::error::{invalid, IdtError, Result};
use crate::parallel;
use crate::process_models::stable::{positive_stable, symmetric_stable};
use crate::process_models::{PathEnsemble, SamplePath, TimeGrid};
use crate::rng::SeedInfo;

/// `X_t = t^{1/α} S` with one stable draw `S` per path.
///
/// Symmetric draws have characteristic function `exp(-|z|^α)`, so `α = 2`
/// gives a centred Gaussian of variance 2. One-sided draws have Laplace
/// transform `exp(-λ^α)` and need `α < 1`.
pub fn stable_ray(alpha: f64, one_sided: bool, grid: &TimeGrid, m: usize, seed: impl Into<SeedInfo>) -> Result<PathEnsemble> {
    let seed = seed.into();
    let ok = if one_sided { alpha > 0.0 && alpha < 1.0 } else { alpha > 0.0 && alpha <= 2.0 };
    if !ok {
        let range = if one_sided { "(0, 1)" } else { "(0, 2]" };
        return Err(IdtError::BadStableIndex { alpha, range });
    }
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let shape: Vec<f64> = grid.times().iter().map(|t| t.powf(1.0 / alpha)).collect();
    let grid = Arc::new(grid.clone());
    let paths = parallel::try_map_indices(m, |i| {
        let mut rng = seed.path_rng(i);
        let s = if one_sided { positive_stable(alpha, &mut rng) } else { symmetric_stable(alpha, &mut rng) };
        SamplePath::new(grid.clone(), shape.iter().map(|c| c * s).collect(), None)
    })?;
    PathEnsemble::new(grid, paths, seed)
}
