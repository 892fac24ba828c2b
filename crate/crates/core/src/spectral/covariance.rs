use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::constructions::{KernelShape, PhiKernel};
use crate::error::{IdtError, Result};
use crate::fmt::float17;
use crate::process_models::{PathEnsemble, TimeGrid};
use crate::quadrature::{integrate, integrate_pieces, integrate_to_infinity, QuadOptions};

/// A covariance function `c(s, t)` on `[0, ∞)²`.
#[derive(Clone)]
pub enum CovarianceFn {
    /// `s ∫ φ(sv/t) φ(v) dv`.
    FromPhi(PhiKernel),
    /// `min(s, t)`.
    Min,
    /// `σ² min(s, t)`.
    ScaledMin(f64),
    /// `√(st) · mass · exp(-rate |ln(s/t)|)`, the covariance of a Cauchy spectral density.
    ExpLog { mass: f64, rate: f64 },
    /// Sample covariance on a grid, bilinear between nodes.
    Empirical { grid: TimeGrid, gram: Vec<Vec<f64>> },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CovarianceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceFn::FromPhi(phi) => f.debug_tuple("FromPhi").field(phi).finish(),
            CovarianceFn::Min => f.write_str("Min"),
            CovarianceFn::ScaledMin(v) => f.debug_tuple("ScaledMin").field(v).finish(),
            CovarianceFn::ExpLog { mass, rate } => f.debug_struct("ExpLog").field("mass", mass).field("rate", rate).finish(),
            CovarianceFn::Empirical { grid, .. } => f.debug_struct("Empirical").field("grid", grid).finish_non_exhaustive(),
            CovarianceFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CovarianceFn {
    pub fn custom(c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CovarianceFn::Custom(Arc::new(c))
    }

    /// Sample covariance matrix of the ensemble at its grid points.
    pub fn empirical(ensemble: &PathEnsemble) -> Self {
        let n = ensemble.grid.len();
        let m = ensemble.m() as f64;
        let mut mean = vec![0.0; n];
        for p in &ensemble.paths {
            for (k, v) in p.values.iter().enumerate() {
                mean[k] += v;
            }
        }
        mean.iter_mut().for_each(|x| *x /= m);
        let mut gram = vec![vec![0.0; n]; n];
        for p in &ensemble.paths {
            for i in 0..n {
                let di = p.values[i] - mean[i];
                for j in i..n {
                    gram[i][j] += di * (p.values[j] - mean[j]);
                }
            }
        }
        let denom = (m - 1.0).max(1.0);
        for i in 0..n {
            for j in i..n {
                gram[i][j] /= denom;
                gram[j][i] = gram[i][j];
            }
        }
        CovarianceFn::Empirical { grid: (*ensemble.grid).clone(), gram }
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            CovarianceFn::FromPhi(phi) => covariance_phi(phi, s, t),
            CovarianceFn::Min => Ok(s.min(t)),
            CovarianceFn::ScaledMin(v) => Ok(v * s.min(t)),
            CovarianceFn::ExpLog { mass, rate } => {
                if s == 0.0 || t == 0.0 {
                    return Ok(0.0);
                }
                Ok((s * t).sqrt() * mass * (-rate * (s / t).ln().abs()).exp())
            }
            CovarianceFn::Empirical { grid, gram } => {
                let (i0, i1, wi) = bracket(grid, s)?;
                let (j0, j1, wj) = bracket(grid, t)?;
                let row = |i: usize| gram[i][j0] * (1.0 - wj) + gram[i][j1] * wj;
                Ok(row(i0) * (1.0 - wi) + row(i1) * wi)
            }
            CovarianceFn::Custom(c) => Ok(c(s, t)),
        }
    }
}

fn bracket(grid: &TimeGrid, x: f64) -> Result<(usize, usize, f64)> {
    let t = grid.times();
    if let Some(k) = grid.index_of(x) {
        return Ok((k, k, 0.0));
    }
    if !(x >= 0.0 && x <= grid.last()) {
        return Err(IdtError::GridMismatch(x));
    }
    let k = t.partition_point(|&g| g <= x);
    Ok((k - 1, k, (x - t[k - 1]) / (t[k] - t[k - 1])))
}

/// `c(s, t) = s ∫_0^∞ φ(sv/t) φ(v) dv`, zero when either time is zero.
///
/// Power-tail kernels use the exact antiderivative. The beta-edge kernel is
/// integrated after `v = L(1 - w^p)`, `p = 1/(1 - 2α)`, which removes the
/// endpoint singularity at `L = min(1, t/s)`.
pub fn covariance_phi(phi: &PhiKernel, s: f64, t: f64) -> Result<f64> {
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    // evaluate in a fixed order so that symmetry holds to the last bit
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    let r = t / s;
    match phi.shape {
        KernelShape::PowerTailUpper { alpha } => {
            let l = r.max(1.0);
            Ok(s * r.powf(alpha) * l.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0))
        }
        KernelShape::PowerTailLower { alpha } => {
            let l = r.min(1.0);
            Ok(s * r.powf(alpha) * l.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha))
        }
        KernelShape::BetaEdge { alpha } => {
            // r >= 1 here, so the integral runs over [0, 1]
            let opts = QuadOptions::with_tol(1e-14, 1e-12);
            let q = if r == 1.0 {
                return Ok(s / (1.0 - 2.0 * alpha));
            } else if alpha > 0.0 {
                // 1 - v = w^p turns the edge pole into a bounded integrand
                let p = 1.0 / (1.0 - 2.0 * alpha);
                let g = |w: f64| {
                    if w <= 0.0 {
                        return 0.0;
                    }
                    let e = w.powf(p);
                    p * (r * e / (r - 1.0 + e)).powf(alpha)
                };
                // the other factor turns over near w = (r - 1)^{1/p}
                let w0 = (r - 1.0).powf(1.0 / p);
                let mut pts = vec![0.0, 1.0];
                pts.extend([w0 / 16.0, w0 / 4.0, w0, 4.0 * w0, 16.0 * w0].into_iter().filter(|w| *w > 0.0 && *w < 1.0));
                integrate_pieces(g, &pts, opts)
            } else {
                integrate(|v: f64| ((1.0 - v / r) * (1.0 - v)).max(0.0).powf(-alpha), 0.0, 1.0, opts)
            };
            Ok(s * q.require("beta-edge covariance")?)
        }
        KernelShape::Tabulated { .. } => covariance_phi_quadrature(phi, s, t),
    }
}

/// The defining integral of [`covariance_phi`] by plain adaptive quadrature,
/// split at the kernel breakpoints `b` and `b·t/s`.
pub fn covariance_phi_quadrature(phi: &PhiKernel, s: f64, t: f64) -> Result<f64> {
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let r = t / s;
    let f = |v: f64| phi.eval(v / r) * phi.eval(v);
    let end = phi.support_end().min(phi.support_end() * r);
    let mut pts = vec![0.0];
    for b in phi.breakpoints() {
        pts.push(b);
        pts.push(b * r);
    }
    let opts = QuadOptions::with_tol(1e-13, 1e-10);
    if end.is_finite() {
        pts.retain(|&x| x <= end);
        pts.push(end);
        Ok(s * integrate_pieces(f, &pts, opts).require("kernel covariance")?)
    } else {
        let top = pts.iter().copied().fold(0.0, f64::max);
        let head = integrate_pieces(f, &pts, opts).require("kernel covariance")?;
        let tail = integrate_to_infinity(f, top, opts).require("kernel covariance tail")?;
        Ok(s * (head + tail))
    }
}

/// `e^{-|x|/2} ∫_0^∞ φ(e^{-|x|} v) φ(v) dv`, the Fourier transform of the
/// spectral measure at `x`, by quadrature.
pub fn spectral_hat(phi: &PhiKernel, x: f64) -> Result<f64> {
    let a = x.abs();
    Ok((-a / 2.0).exp() * covariance_phi(phi, 1.0, a.exp())?)
}

/// `e^{-(y+z)/2} c(e^y, e^z)`.
pub fn lamperti_covariance(c: &CovarianceFn, y: f64, z: f64) -> Result<f64> {
    Ok((-(y + z) / 2.0).exp() * c.eval(y.exp(), z.exp())?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    /// `max |c(αs, αt) - α c(s, t)| / (1 + |α c(s, t)|)`.
    pub max_residual: f64,
    pub worst_alpha: f64,
    pub worst_pair: (f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Checks the 1-homogeneity `c(αs, αt) = α c(s, t)` on the given probes.
pub fn scaling_check(c: &CovarianceFn, alphas: &[f64], pairs: &[(f64, f64)], tol: f64) -> Result<ScalingReport> {
    let mut report = ScalingReport { max_residual: 0.0, worst_alpha: f64::NAN, worst_pair: (f64::NAN, f64::NAN), tol, pass: true };
    for &a in alphas {
        for &(s, t) in pairs {
            let rhs = a * c.eval(s, t)?;
            let lhs = c.eval(a * s, a * t)?;
            let r = (lhs - rhs).abs() / (1.0 + rhs.abs());
            if !(r <= report.max_residual) {
                report.max_residual = r;
                report.worst_alpha = a;
                report.worst_pair = (s, t);
            }
        }
    }
    report.pass = report.max_residual < tol;
    Ok(report)
}

/// CSV with header `s,t,covariance`.
pub fn write_covariance_csv<W: Write>(c: &CovarianceFn, pairs: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "s,t,covariance")?;
    for &(s, t) in pairs {
        writeln!(out, "{},{},{}", float17(s), float17(t), float17(c.eval(s, t)?))?;
    }
    Ok(())
}
