use serde::{Deserialize, Serialize};

use super::{
    gaussian_exact, gaussian_phi_path, integral_transform_with, jump_transform, stable_ray, JumpFunctionalSpec,
    PhiKernel, RadialMeasure, DEFAULT_TRANSFORM_NODES,
};
use crate::error::{invalid, Result};
use crate::process_models::{sample_besq1, sample_levy, JumpPart, LevyTriplet, PathEnsemble, TimeGrid};
use crate::rng::SeedInfo;

/// Anything that can produce a seeded ensemble on an arbitrary grid.
pub trait PathSampler: Send + Sync {
    fn label(&self) -> String;
    fn sample(&self, grid: &TimeGrid, m: usize, seed: SeedInfo) -> Result<PathEnsemble>;
}

fn default_base_cells() -> usize {
    1024
}

fn default_nodes() -> usize {
    DEFAULT_TRANSFORM_NODES
}

/// Serializable description of a process; the CLI config uses the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstructionSpec {
    Levy {
        triplet: LevyTriplet,
    },
    Besq1 {},
    StableRay {
        alpha: f64,
        #[serde(default)]
        one_sided: bool,
    },
    /// `∫ μ(du) X_{ut}` over a base process sampled on a uniform mesh of
    /// `[0, u_max t_max]` refined by the atoms `u_i t_j`.
    IntegralTransform {
        base: Box<ConstructionSpec>,
        mu: RadialMeasure,
        #[serde(default = "default_base_cells")]
        base_cells: usize,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Jump transform of a compound Poisson base observed on `[0, horizon]`.
    JumpTransform {
        triplet: LevyTriplet,
        functional: JumpFunctionalSpec,
        horizon: f64,
    },
    GaussianPhi {
        phi: PhiKernel,
    },
    GaussianExact {
        phi: PhiKernel,
    },
}

impl ConstructionSpec {
    pub fn brownian() -> Self {
        ConstructionSpec::Levy { triplet: LevyTriplet::brownian() }
    }

    /// `Y_t = Σ w_i X_{u_i t}` over a Brownian base.
    pub fn brownian_point_transform(atoms: Vec<(f64, f64)>) -> Self {
        ConstructionSpec::IntegralTransform {
            base: Box::new(Self::brownian()),
            mu: RadialMeasure::PointMasses { atoms },
            base_cells: default_base_cells(),
            nodes: default_nodes(),
        }
    }

    fn base_grid(mu: &RadialMeasure, grid: &TimeGrid, cells: usize) -> Result<TimeGrid> {
        let reach = mu.support_max() * grid.last();
        let mut points: Vec<f64> = Vec::new();
        if let RadialMeasure::PointMasses { atoms } = mu {
            for &(u, _) in atoms {
                points.extend(grid.times().iter().map(|t| u * t));
            }
        }
        let mut g = TimeGrid::through(&points)?;
        if reach > 0.0 && cells > 0 {
            g = g.union(&TimeGrid::uniform(reach, cells)?);
        }
        Ok(g)
    }
}

impl PathSampler for ConstructionSpec {
    fn label(&self) -> String {
        match self {
            ConstructionSpec::Levy { .. } => "levy".into(),
            ConstructionSpec::Besq1 {} => "besq1".into(),
            ConstructionSpec::StableRay { alpha, one_sided } => {
                format!("stable_ray(alpha={alpha}{})", if *one_sided { ", one_sided" } else { "" })
            }
            ConstructionSpec::IntegralTransform { base, .. } => format!("integral_transform({})", base.label()),
            ConstructionSpec::JumpTransform { .. } => "jump_transform".into(),
            ConstructionSpec::GaussianPhi { .. } => "gaussian_phi".into(),
            ConstructionSpec::GaussianExact { .. } => "gaussian_exact".into(),
        }
    }

    fn sample(&self, grid: &TimeGrid, m: usize, seed: SeedInfo) -> Result<PathEnsemble> {
        match self {
            ConstructionSpec::Levy { triplet } => sample_levy(triplet, grid, m, seed),
            ConstructionSpec::Besq1 {} => sample_besq1(grid, m, seed),
            ConstructionSpec::StableRay { alpha, one_sided } => stable_ray(*alpha, *one_sided, grid, m, seed),
            ConstructionSpec::IntegralTransform { base, mu, base_cells, nodes } => {
                mu.validate()?;
                let base_grid = Self::base_grid(mu, grid, *base_cells)?;
                let x = base.sample(&base_grid, m, seed)?;
                integral_transform_with(&x, mu, grid, *nodes)
            }
            ConstructionSpec::JumpTransform { triplet, functional, horizon } => {
                if !matches!(triplet.jump_part, JumpPart::CompoundPoisson { .. }) {
                    return Err(invalid("jump transforms need a compound Poisson base"));
                }
                if !(*horizon > 0.0 && horizon.is_finite()) {
                    return Err(invalid(format!("horizon must be positive, got {horizon}")));
                }
                let x = sample_levy(triplet, &TimeGrid::new(vec![0.0, *horizon])?, m, seed)?;
                jump_transform(&x, &functional.build()?, grid)
            }
            ConstructionSpec::GaussianPhi { phi } => gaussian_phi_path(phi, grid, m, seed),
            ConstructionSpec::GaussianExact { phi } => gaussian_exact(phi, grid, m, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ConstructionSpec::brownian_point_transform(vec![(1.0, 1.0), (2.0, 1.0)]);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ConstructionSpec>(&s).unwrap(), spec);
        let ray: ConstructionSpec = serde_json::from_str(r#"{"kind":"stable_ray","alpha":1.0}"#).unwrap();
        assert_eq!(ray, ConstructionSpec::StableRay { alpha: 1.0, one_sided: false });
        assert!(serde_json::from_str::<ConstructionSpec>(r#"{"kind":"besq1","extra":1}"#).is_err());
    }

    #[test]
    fn point_transform_hits_scaled_times_exactly() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let spec = ConstructionSpec::brownian_point_transform(vec![(1.0, 1.0), (2.0, 1.0)]);
        let y = spec.sample(&grid, 3, SeedInfo::new(9)).unwrap();
        let base_grid = ConstructionSpec::base_grid(&RadialMeasure::PointMasses { atoms: vec![(1.0, 1.0), (2.0, 1.0)] }, &grid, 1024).unwrap();
        let x = ConstructionSpec::brownian().sample(&base_grid, 3, SeedInfo::new(9)).unwrap();
        for (py, px) in y.paths.iter().zip(&x.paths) {
            for &t in grid.times() {
                let want = px.value_at(t).unwrap() + px.value_at(2.0 * t).unwrap();
                assert_eq!(py.value_at(t).unwrap(), want);
            }
        }
    }

    #[test]
    fn jump_transform_needs_compound_poisson() {
        let spec = ConstructionSpec::JumpTransform {
            triplet: LevyTriplet::brownian(),
            functional: JumpFunctionalSpec::Identity {},
            horizon: 1.0,
        };
        assert!(spec.sample(&TimeGrid::new(vec![0.0, 1.0]).unwrap(), 1, SeedInfo::new(0)).is_err());
    }
}
