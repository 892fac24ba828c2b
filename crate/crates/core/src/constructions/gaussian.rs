use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::PhiKernel;
use crate::error::{invalid, IdtError, Result};
use crate::parallel;
use crate::process_models::{PathEnsemble, SamplePath, TimeGrid};
use crate::rng::SeedInfo;
use crate::spectral::covariance_phi;

/// Discretisation of `G_t = ∫_0^∞ φ(u/t) dB_u` on a mesh of `[0, T]`.
///
/// The mesh is geometric above `lower_factor · t_min`, with one cell down to 0,
/// and contains every kernel breakpoint `b·t` of every output time. On each
/// cell the kernel is replaced by its cell average, so
/// `G_t ≈ Σ_k c_k(t) ΔB_k` with one shared set of increments per path.
#[derive(Debug, Clone)]
pub struct PhiPathScheme {
    edges: Vec<f64>,
    /// Per output time, `c_k(t) √Δ_k` for every cell.
    rows: Vec<Vec<f64>>,
}

impl PhiPathScheme {
    pub fn new(phi: &PhiKernel, grid: &TimeGrid) -> Result<Self> {
        phi.validate()?;
        let times = grid.times();
        let positive: Vec<f64> = times.iter().copied().filter(|t| *t > 0.0).collect();
        if positive.is_empty() {
            return Ok(Self { edges: vec![0.0], rows: vec![Vec::new(); times.len()] });
        }
        let q = phi.quad;
        let t_min = positive[0];
        let t_max = grid.last();
        let norm = phi.l2_norm_sq();
        let relative_mass = phi.l2_tail(q.truncation_factor) / norm;
        if !(relative_mass <= q.tol) {
            return Err(IdtError::TruncationTooSmall { relative_mass, tolerance: q.tol });
        }
        let upper = (q.truncation_factor * t_max).min(phi.support_end() * t_max);
        let lower = (q.lower_factor * t_min).min(0.5 * upper);
        let ratio = (upper / lower).powf(1.0 / q.cells as f64);
        let mut edges = Vec::with_capacity(q.cells + 2 + positive.len());
        edges.push(0.0);
        let mut x = lower;
        for _ in 0..q.cells {
            edges.push(x);
            x *= ratio;
        }
        edges.push(upper);
        for &t in &positive {
            for b in phi.breakpoints() {
                let e = b * t;
                if e > 0.0 && e <= upper {
                    edges.push(e);
                    // kernels may blow up at a breakpoint, so refine geometrically on both sides
                    let mut d = 0.5;
                    for _ in 0..30 {
                        for y in [e * (1.0 - d), e * (1.0 + d)] {
                            if y > 0.0 && y < upper {
                                edges.push(y);
                            }
                        }
                        d *= 0.5;
                    }
                }
            }
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());

        let rows = times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return Vec::new();
                }
                edges
                    .windows(2)
                    .map(|w| {
                        let width = w[1] - w[0];
                        t * phi.integral(w[0] / t, w[1] / t) / width.sqrt()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { edges, rows })
    }

    pub fn cells(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    /// Exact covariance of the discretised process between grid indices `i` and `j`.
    pub fn discretized_covariance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.rows[i], &self.rows[j]);
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn path(&self, seed: &SeedInfo, index: usize) -> Vec<f64> {
        let mut rng = seed.path_rng(index);
        let z: Vec<f64> = (0..self.cells()).map(|_| StandardNormal.sample(&mut rng)).collect();
        self.rows
            .iter()
            .map(|row| if row.is_empty() { 0.0 } else { row.iter().zip(&z).map(|(c, n)| c * n).sum() })
            .collect()
    }
}

/// Paths of `G^{(φ)}` from one discretised Brownian stochastic integral per path.
pub fn gaussian_phi_path(phi: &PhiKernel, grid: &TimeGrid, m: usize, seed: impl Into<SeedInfo>) -> Result<PathEnsemble> {
    let seed = seed.into();
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let scheme = PhiPathScheme::new(phi, grid)?;
    let grid = Arc::new(grid.clone());
    let paths = parallel::try_map_indices(m, |i| SamplePath::new(grid.clone(), scheme.path(&seed, i), None))?;
    PathEnsemble::new(grid, paths, seed)
}

/// `[c(t_i, t_j)]` on the grid from [`covariance_phi`].
pub fn gram_matrix(phi: &PhiKernel, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let t = grid.times();
    let n = t.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = covariance_phi(phi, t[i], t[j])?;
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
    }
    Ok(k)
}

/// Square-root factor `L` with `L Lᵀ = K` from the symmetric eigendecomposition.
///
/// Eigenvalues in `[-jitter, 0)` with `jitter = 1e-10 · trace` are clamped to 0.
pub fn psd_factor(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let jitter = 1e-10 * k.trace().abs();
    let eig = SymmetricEigen::new(k.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -jitter {
        return Err(IdtError::NotPositiveSemidefinite { min_eigenvalue: min, jitter });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Exact multivariate Gaussian draws with the covariance of `G^{(φ)}` on the grid.
pub fn gaussian_exact(phi: &PhiKernel, grid: &TimeGrid, m: usize, seed: impl Into<SeedInfo>) -> Result<PathEnsemble> {
    let seed = seed.into();
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    phi.validate()?;
    let times = grid.times();
    // t = 0 rows vanish identically; factor only the positive-time block.
    let pos: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 0.0).collect();
    let sub = TimeGrid::new(std::iter::once(0.0).chain(pos.iter().map(|&i| times[i])).collect())?;
    let full = gram_matrix(phi, &sub)?;
    let k = full.view((1, 1), (pos.len(), pos.len())).into_owned();
    let factor = psd_factor(&k)?;
    let grid = Arc::new(grid.clone());
    let paths = parallel::try_map_indices(m, |i| {
        let mut rng = seed.path_rng(i);
        let z = DVector::from_iterator(pos.len(), (0..pos.len()).map(|_| StandardNormal.sample(&mut rng)));
        let x = &factor * z;
        let mut values = vec![0.0; times.len()];
        for (slot, &gi) in pos.iter().enumerate() {
            values[gi] = x[slot];
        }
        SamplePath::new(grid.clone(), values, None)
    })?;
    PathEnsemble::new(grid, paths, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::KernelQuad;

    fn cov_with_se(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
        let c = prods.iter().sum::<f64>() / (n - 1.0);
        let v = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / (n - 1.0);
        (c, (v / n).sqrt())
    }

    #[test]
    fn discretized_covariance_tracks_closed_form() {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 2.0, 4.0]).unwrap();
        for phi in [
            PhiKernel::power_tail_upper(1.0).unwrap(),
            PhiKernel::power_tail_upper(0.75).unwrap(),
            PhiKernel::power_tail_lower(0.25).unwrap(),
            PhiKernel::power_tail_lower(0.0).unwrap(),
            PhiKernel::beta_edge(0.25).unwrap(),
        ] {
            let s = PhiPathScheme::new(&phi, &grid).unwrap();
            let t = grid.times();
            for i in 1..t.len() {
                for j in i..t.len() {
                    let exact = covariance_phi(&phi, t[i], t[j]).unwrap();
                    let disc = s.discretized_covariance(i, j);
                    assert!((disc - exact).abs() < 2e-3 * exact.abs().max(1.0), "{phi:?} ({},{}): {disc} vs {exact}", t[i], t[j]);
                }
            }
        }
    }

    #[test]
    fn brownian_kernel_covariance_matrix() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let phi = PhiKernel::power_tail_upper(1.0).unwrap();
        let e = gaussian_phi_path(&phi, &grid, 100_000, 21).unwrap();
        let g1 = e.values_at(1.0).unwrap();
        let g2 = e.values_at(2.0).unwrap();
        for ((x, y), want) in [((&g1, &g1), 1.0), ((&g1, &g2), 1.0), ((&g2, &g2), 2.0)] {
            let (c, se) = cov_with_se(x, y);
            assert!((c - want).abs() < 4.0 * se, "{c} vs {want} ± {se}");
        }
        assert!(e.paths.iter().all(|p| p.values[0] == 0.0));
    }

    #[test]
    fn power_three_quarters_cross_covariance() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 4.0]).unwrap();
        let phi = PhiKernel::power_tail_upper(0.75).unwrap();
        let e = gaussian_phi_path(&phi, &grid, 100_000, 22).unwrap();
        let (c, se) = cov_with_se(&e.values_at(1.0).unwrap(), &e.values_at(4.0).unwrap());
        assert!((c - 2.0 * 2f64.sqrt()).abs() < 4.0 * se, "{c} ± {se}");
    }

    #[test]
    fn truncation_check() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let phi = PhiKernel::power_tail_upper(0.55).unwrap();
        assert!(matches!(gaussian_phi_path(&phi, &grid, 10, 0), Err(IdtError::TruncationTooSmall { .. })));
        let short = PhiKernel::power_tail_upper(1.0).unwrap().with_quad(KernelQuad { truncation_factor: 50.0, ..KernelQuad::default() });
        assert!(matches!(gaussian_phi_path(&short, &grid, 10, 0), Err(IdtError::TruncationTooSmall { .. })));
    }

    #[test]
    fn exact_gram_is_min_for_brownian_kernel() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let k = gram_matrix(&PhiKernel::power_tail_upper(1.0).unwrap(), &grid).unwrap();
        let t = grid.times();
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[(i, j)] - t[i].min(t[j])).abs() < 1e-6);
            }
        }
        let lower = gram_matrix(&PhiKernel::power_tail_lower(0.0).unwrap(), &TimeGrid::new(vec![0.0, 1.0, 4.0]).unwrap()).unwrap();
        assert!((lower[(1, 2)] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn exact_sampler_is_deterministic_and_pinned_at_zero() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let phi = PhiKernel::beta_edge(0.25).unwrap();
        let a = gaussian_exact(&phi, &grid, 1, 5).unwrap();
        let b = gaussian_exact(&phi, &grid, 1, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.paths[0].values[0], 0.0);
    }

    #[test]
    fn negative_definite_matrix_is_rejected() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_factor(&k), Err(IdtError::NotPositiveSemidefinite { .. })));
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_factor(&near).unwrap();
        assert!((&l * l.transpose() - near).norm() < 1e-12);
    }
}
