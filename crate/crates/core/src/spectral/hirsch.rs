use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::CovarianceFn;
use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;

/// Sub-intervals of `[0, 1]` used to tabulate `C(r) = ∫_0^r c(1, s) ds`.
const TABLE_CELLS: usize = 4096;
const GL_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HirschSpectrum {
    pub min_eigenvalue: f64,
    /// Largest eigenvalue magnitude (spectral norm).
    pub norm: f64,
}

impl HirschSpectrum {
    pub fn relative(&self) -> f64 {
        if self.norm == 0.0 {
            0.0
        } else {
            self.min_eigenvalue / self.norm
        }
    }

    pub fn is_nonnegative(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue >= -rel_tol * self.norm
    }
}

/// `C(r)` on a uniform table with Hermite interpolation, using `C' = c(1, ·)`.
struct Antiderivative {
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Antiderivative {
    fn new(c: &CovarianceFn) -> Result<Self> {
        let (x, w) = gauss_legendre(GL_NODES);
        let h = 1.0 / TABLE_CELLS as f64;
        let mut values = Vec::with_capacity(TABLE_CELLS + 1);
        let mut slopes = Vec::with_capacity(TABLE_CELLS + 1);
        let mut acc = 0.0;
        values.push(0.0);
        slopes.push(c.eval(1.0, 0.0)?);
        for k in 0..TABLE_CELLS {
            let a = k as f64 * h;
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                s += wi * c.eval(1.0, a + 0.5 * h * (xi + 1.0))?;
            }
            acc += 0.5 * h * s;
            values.push(acc);
            slopes.push(c.eval(1.0, a + h)?);
        }
        Ok(Self { h, values, slopes })
    }

    fn at(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        let k = ((r / self.h) as usize).min(TABLE_CELLS - 1);
        let t = r / self.h - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.h, self.slopes[k + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }
}

/// Matrix of `Q(f) = ∫_0^1 du f(u) ∫_0^1 ds f(su) c(1, s)` on indicator
/// functions of `n` equal cells, before symmetrisation.
///
/// Writing `w = su`, the entry for cells `i ≥ j` is
/// `∫_{cell i} du [C(min(x_{j+1}, u)/u) - C(x_j/u)]`.
pub fn hirsch_matrix(c: &CovarianceFn, n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(invalid("hirsch form needs at least two cells"));
    }
    let big_c = Antiderivative::new(c)?;
    let (x, w) = gauss_legendre(GL_NODES);
    let h = 1.0 / n as f64;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let a = i as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let u = a + 0.5 * h * (xi + 1.0);
            let weight = 0.5 * h * wi;
            for j in 0..=i {
                let lo = j as f64 * h;
                let hi = ((j + 1) as f64 * h).min(u);
                k[(i, j)] += weight * (big_c.at(hi / u) - big_c.at(lo / u));
            }
        }
    }
    Ok(k)
}

/// Smallest eigenvalue of the symmetrised Hirsch matrix at resolution `n`.
pub fn hirsch_min_eig(c: &CovarianceFn, n: usize) -> Result<HirschSpectrum> {
    let k = hirsch_matrix(c, n)?;
    let sym = (&k + k.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    Ok(HirschSpectrum { min_eigenvalue, norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::PhiKernel;

    #[test]
    fn brownian_form_is_positive() {
        let s = hirsch_min_eig(&CovarianceFn::Min, 64).unwrap();
        assert!(s.relative() >= -1e-10, "{s:?}");
    }

    #[test]
    fn brownian_matrix_against_exact_cell_integrals() {
        // c(1, s) = s, C(r) = r²/2: diagonal entries are ∫_{cell} [C(1) - C(x_i/u)] du
        // and off-diagonal ones are ∫ (x_{j+1}² - x_j²) / (2u²) du.
        let n = 4;
        let k = hirsch_matrix(&CovarianceFn::Min, n).unwrap();
        let h = 1.0 / n as f64;
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let diag = if i == 0 { h / 2.0 } else { h / 2.0 - a * a / 2.0 * (1.0 / a - 1.0 / b) };
            assert!((k[(i, i)] - diag).abs() < 1e-12, "{i}: {} vs {diag}", k[(i, i)]);
            for j in 0..i {
                let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
                let want = (hi * hi - lo * lo) / 2.0 * (1.0 / a - 1.0 / b);
                assert!((k[(i, j)] - want).abs() < 1e-12, "({i},{j})");
                assert_eq!(k[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn kernel_covariances_are_positive() {
        for phi in [
            PhiKernel::power_tail_upper(0.75).unwrap(),
            PhiKernel::power_tail_lower(0.25).unwrap(),
            PhiKernel::beta_edge(0.25).unwrap(),
        ] {
            let s = hirsch_min_eig(&CovarianceFn::FromPhi(phi.clone()), 64).unwrap();
            assert!(s.is_nonnegative(1e-8), "{phi:?}: {s:?}");
        }
    }

    #[test]
    fn negated_form_fails() {
        let c = CovarianceFn::custom(|s, t| -s.min(t));
        let s = hirsch_min_eig(&c, 8).unwrap();
        assert!(s.min_eigenvalue < 0.0 && !s.is_nonnegative(1e-8));
    }
}
