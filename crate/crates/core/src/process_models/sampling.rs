use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, Poisson, StandardNormal};

use super::grid::{PathEnsemble, SamplePath, TimeGrid};
use super::stable::{positive_stable, symmetric_stable};
use super::triplet::{JumpPart, LevyTriplet};
use crate::error::{invalid, IdtError, Result};
use crate::parallel;
use crate::rng::SeedInfo;

/// Samples `m` independent paths of the Lévy process described by `triplet`
/// at the grid points, from independent stationary increments.
pub fn sample_levy(triplet: &LevyTriplet, grid: &TimeGrid, m: usize, seed: impl Into<SeedInfo>) -> Result<PathEnsemble> {
    let seed = seed.into();
    triplet.validate()?;
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if let JumpPart::TabulatedDensity { .. } = triplet.jump_part {
        return Err(IdtError::NotSamplable("tabulated Lévy densities are analytic-only".into()));
    }
    let grid = Arc::new(grid.clone());
    let record_jumps = matches!(triplet.jump_part, JumpPart::CompoundPoisson { .. });
    let paths = parallel::try_map_indices(m, |i| {
        let mut rng = seed.path_rng(i);
        let (values, jumps) = levy_path(triplet, grid.times(), &mut rng, record_jumps)?;
        SamplePath::new(grid.clone(), values, jumps)
    })?;
    PathEnsemble::new(grid, paths, seed)
}

fn levy_path<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    times: &[f64],
    rng: &mut R,
    record_jumps: bool,
) -> Result<(Vec<f64>, Option<Vec<(f64, f64)>>)> {
    let mut values = Vec::with_capacity(times.len());
    let mut jumps = record_jumps.then(Vec::new);
    let mut x = 0.0;
    values.push(x);
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        let mut inc = triplet.drift * dt;
        if triplet.gaussian_var > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            inc += (triplet.gaussian_var * dt).sqrt() * n;
        }
        inc += match &triplet.jump_part {
            JumpPart::None {} => 0.0,
            JumpPart::CompoundPoisson { rate, jump_dist } => {
                let count = Poisson::new(rate * dt)
                    .map_err(|e| invalid(format!("poisson intensity {}: {e}", rate * dt)))?
                    .sample(rng) as usize;
                let mut local: Vec<(f64, f64)> = (0..count)
                    .map(|_| {
                        let u: f64 = Open01.sample(rng);
                        (t0 + u * dt, jump_dist.sample(rng))
                    })
                    .collect();
                local.sort_by(|a, b| a.0.total_cmp(&b.0));
                let sum = local.iter().map(|j| j.1).sum();
                if let Some(js) = jumps.as_mut() {
                    js.extend(local);
                }
                sum
            }
            JumpPart::StableSubordinator { alpha, scale } => scale * dt.powf(1.0 / alpha) * positive_stable(*alpha, rng),
            JumpPart::SymmetricStable { alpha, scale } => scale * dt.powf(1.0 / alpha) * symmetric_stable(*alpha, rng),
            JumpPart::Gamma { shape_rate, scale } => Gamma::new(shape_rate * dt, *scale)
                .map_err(|e| invalid(format!("gamma increment: {e}")))?
                .sample(rng),
            JumpPart::TabulatedDensity { .. } => unreachable!("rejected before sampling"),
        };
        x += inc;
        values.push(x);
    }
    Ok((values, jumps))
}

/// Squared Bessel process of dimension 1, sampled as the square of a Brownian path.
pub fn sample_besq1(grid: &TimeGrid, m: usize, seed: impl Into<SeedInfo>) -> Result<PathEnsemble> {
    let seed = seed.into();
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let grid = Arc::new(grid.clone());
    let bm = LevyTriplet::brownian();
    let paths = parallel::try_map_indices(m, |i| {
        let mut rng = seed.path_rng(i);
        let (values, _) = levy_path(&bm, grid.times(), &mut rng, false)?;
        SamplePath::new(grid.clone(), values.into_iter().map(|b| b * b).collect(), None)
    })?;
    PathEnsemble::new(grid, paths, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_models::JumpDist;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn brownian_moments() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let e = sample_levy(&LevyTriplet::brownian(), &g, 100_000, 1).unwrap();
        let (mean, var) = mean_var(&e.values_at(1.0).unwrap());
        assert!(mean.abs() < 3.0 * 10f64.powf(-2.5), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
        assert!(e.paths.iter().all(|p| p.values[0] == 0.0));
    }

    #[test]
    fn subordinator_paths_nondecreasing() {
        let g = TimeGrid::uniform(5.0, 50).unwrap();
        let t = LevyTriplet::new(0.0, 0.0, JumpPart::StableSubordinator { alpha: 0.5, scale: 1.0 }).unwrap();
        let e = sample_levy(&t, &g, 500, 2).unwrap();
        for p in &e.paths {
            assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn compound_poisson_counts() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let t = LevyTriplet::compound_poisson(2.0, JumpDist::PointMass { x0: 1.0 }).unwrap();
        let m = 100_000;
        let e = sample_levy(&t, &g, m, 3).unwrap();
        let counts: Vec<f64> = e.paths.iter().map(|p| p.jumps.as_ref().unwrap().len() as f64).collect();
        let (mean, _) = mean_var(&counts);
        // Poisson(2): sd of the mean is sqrt(2/m)
        assert!((mean - 2.0).abs() < 3.0 * (2.0 / m as f64).sqrt(), "mean {mean}");
        for p in &e.paths {
            let js = p.jumps.as_ref().unwrap();
            let total: f64 = js.iter().map(|j| j.1).sum();
            assert_eq!(total, p.values[1]);
            assert!(js.iter().all(|j| j.0 >= 0.0 && j.0 <= 1.0));
        }
    }

    #[test]
    fn tabulated_is_not_samplable() {
        let t = LevyTriplet::new(0.0, 0.0, JumpPart::TabulatedDensity { grid: vec![1.0, 2.0], values: vec![1.0, 1.0] })
            .unwrap();
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(sample_levy(&t, &g, 10, 0), Err(IdtError::NotSamplable(_))));
    }

    #[test]
    fn besq_moments() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let m = 100_000;
        let e = sample_besq1(&g, m, 4).unwrap();
        let (mean, var) = mean_var(&e.values_at(1.0).unwrap());
        // Var(β_1²) = 2
        assert!((mean - 1.0).abs() < 3.0 * (2.0 / m as f64).sqrt(), "mean {mean}");
        let g2 = TimeGrid::new(vec![0.0, 2.0]).unwrap();
        let e2 = sample_besq1(&g2, m, 5).unwrap();
        let (_, var2) = mean_var(&e2.values_at(2.0).unwrap());
        assert!((var2 - 8.0).abs() < 0.05 * 8.0, "var {var2}");
        assert!(var > 0.0);
        assert!(e2.paths.iter().all(|p| p.values[0] == 0.0 && p.values.iter().all(|v| *v >= 0.0)));
    }

    #[test]
    fn deterministic_across_calls() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let t = LevyTriplet::compound_poisson(3.0, JumpDist::Exponential { mean: 0.5 }).unwrap();
        let a = sample_levy(&t, &g, 64, 99).unwrap();
        let b = sample_levy(&t, &g, 64, 99).unwrap();
        assert_eq!(a, b);
        let one_worker = parallel::with_workers(Some(1), || sample_levy(&t, &g, 64, 99).unwrap());
        assert_eq!(a, one_worker);
    }
}
