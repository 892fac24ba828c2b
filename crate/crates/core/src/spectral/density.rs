use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constructions::{KernelShape, PhiKernel};
use crate::error::{invalid, IdtError, Result};
use crate::fmt::float17;
use crate::quadrature::{integrate_pieces, integrate_to_infinity, QuadOptions};

/// Density truncation relative to the peak.
const SUPPORT_FLOOR: f64 = 1e-12;
/// Partial sums fed to the repeated-averaging accelerator.
const AVERAGING_DEPTH: usize = 12;
const MAX_PIECES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralForm {
    /// `mass · c / (π (y² + c²))`.
    CauchyKernel { c: f64, mass: f64 },
    /// `Σ wₙ cₙ / (π (y² + cₙ²))` over `(wₙ, cₙ)`; `tail_bound` bounds the dropped terms.
    CauchySeries { terms: Vec<(f64, f64)>, tail_bound: f64 },
    /// Even density, linear between nodes of `grid ⊂ [0, ∞)` (starting at 0), zero beyond.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// Density of a finite symmetric spectral measure on `ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralDensity {
    pub form: SpectralForm,
}

impl SpectralDensity {
    pub fn new(form: SpectralForm) -> Result<Self> {
        let d = Self { form };
        d.validate()?;
        Ok(d)
    }

    pub fn cauchy(c: f64, mass: f64) -> Result<Self> {
        Self::new(SpectralForm::CauchyKernel { c, mass })
    }

    /// `Σ aₙ mₙ (n - α + 1/2) / (π (y² + (n - α + 1/2)²))` from coefficients
    /// `aₙ` of `φ(x) = x^{-α} Σ aₙ xⁿ` and moments `mₙ = ∫ φ(v) v^{n-α} dv`.
    pub fn power_series(alpha: f64, coeffs: &[f64], moments: &[f64]) -> Result<Self> {
        if coeffs.len() != moments.len() || coeffs.is_empty() {
            return Err(invalid("power series needs matching, nonempty coefficient and moment lists"));
        }
        if !(alpha < 0.5) {
            return Err(invalid(format!("power series needs alpha < 1/2, got {alpha}")));
        }
        let terms = coeffs.iter().zip(moments).enumerate().map(|(n, (a, m))| (a * m, n as f64 - alpha + 0.5)).collect();
        Self::new(SpectralForm::CauchySeries { terms, tail_bound: f64::NAN })
    }

    /// [`Self::power_series`] with the moments integrated against a compactly supported kernel.
    pub fn power_series_for_kernel(phi: &PhiKernel, alpha: f64, coeffs: &[f64]) -> Result<Self> {
        let end = phi.support_end();
        if !end.is_finite() {
            return Err(invalid("power series moments need a compactly supported kernel"));
        }
        let mut pts = phi.breakpoints();
        pts.push(0.0);
        pts.retain(|&b| b <= end);
        let moments = (0..coeffs.len())
            .map(|n| {
                let p = n as f64 - alpha;
                integrate_pieces(|v: f64| phi.eval(v) * v.powf(p), &pts, QuadOptions::with_tol(1e-14, 1e-11))
                    .require("kernel moment")
            })
            .collect::<Result<Vec<_>>>()?;
        Self::power_series(alpha, coeffs, &moments)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.form {
            SpectralForm::CauchyKernel { c, mass } => {
                if !(*c > 0.0 && c.is_finite() && *mass >= 0.0 && mass.is_finite()) {
                    return Err(invalid(format!("cauchy density needs c > 0 and finite mass >= 0, got c={c}, mass={mass}")));
                }
            }
            SpectralForm::CauchySeries { terms, .. } => {
                if terms.iter().any(|(w, c)| !(w.is_finite() && *c > 0.0 && c.is_finite())) {
                    return Err(invalid("cauchy series terms need finite weights and positive scales"));
                }
            }
            SpectralForm::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() || grid[0] != 0.0 {
                    return Err(invalid("tabulated density needs matching grid/values starting at 0"));
                }
                if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("tabulated density grid must be finite and strictly increasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("tabulated density values must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, y: f64) -> f64 {
        let y = y.abs();
        match &self.form {
            SpectralForm::CauchyKernel { c, mass } => mass * c / (PI * (y * y + c * c)),
            SpectralForm::CauchySeries { terms, .. } => terms.iter().map(|(w, c)| w * c / (PI * (y * y + c * c))).sum(),
            SpectralForm::Tabulated { grid, values } => {
                if y >= grid[grid.len() - 1] {
                    return 0.0;
                }
                let k = grid.partition_point(|&g| g <= y).clamp(1, grid.len() - 1);
                let w = (y - grid[k - 1]) / (grid[k] - grid[k - 1]);
                values[k - 1] + w * (values[k] - values[k - 1])
            }
        }
    }

    /// `∫ g(y) e^{ixy} dy` in closed form where one exists.
    pub fn fourier_exact(&self, x: f64) -> Option<f64> {
        let x = x.abs();
        match &self.form {
            SpectralForm::CauchyKernel { c, mass } => Some(mass * (-c * x).exp()),
            SpectralForm::CauchySeries { terms, .. } => Some(terms.iter().map(|(w, c)| w * (-c * x).exp()).sum()),
            SpectralForm::Tabulated { .. } => None,
        }
    }

    /// Bound on `sup_y |g(y) - g_N(y)|` for a truncated series, `0` otherwise.
    pub fn truncation_bound(&self) -> f64 {
        match &self.form {
            SpectralForm::CauchySeries { tail_bound, .. } if tail_bound.is_finite() => *tail_bound,
            _ => 0.0,
        }
    }

    fn peak(&self) -> f64 {
        match &self.form {
            SpectralForm::Tabulated { values, .. } => values.iter().copied().fold(0.0, f64::max),
            _ => self.eval(0.0).abs(),
        }
    }

    /// Point beyond which `|g|` stays below `1e-12` of its peak.
    fn support_end(&self) -> f64 {
        if let SpectralForm::Tabulated { grid, .. } = &self.form {
            return grid[grid.len() - 1];
        }
        let floor = SUPPORT_FLOOR * self.peak();
        let mut y = 1.0;
        while self.eval(y).abs() > floor && y < 1e300 {
            y *= 2.0;
        }
        y
    }
}

/// Fourier table for the three parametric kernels.
///
/// Power-tail kernels give `1 / (2π (y² + β²))` with `β = |1/2 - α|`. The
/// beta-edge kernel gives the series with `a₀ = 1/(1 - α)` and
/// `a_{n+1} = aₙ (n + α)/(n + 2 - α)`, truncated after `quad.series_terms`
/// terms with an explicit bound on the remainder.
pub fn table_spectral(phi: &PhiKernel) -> Result<SpectralDensity> {
    phi.validate()?;
    match phi.shape {
        KernelShape::PowerTailUpper { alpha } | KernelShape::PowerTailLower { alpha } => {
            let beta = (0.5 - alpha).abs();
            SpectralDensity::cauchy(beta, 1.0 / (2.0 * beta))
        }
        KernelShape::BetaEdge { alpha } => {
            let n_terms = phi.quad.series_terms.max(1);
            let mut terms = Vec::with_capacity(n_terms);
            let mut a = 1.0 / (1.0 - alpha);
            for n in 0..n_terms {
                let n = n as f64;
                terms.push((a, n + 0.5));
                a *= (n + alpha) / (n + 2.0 - alpha);
            }
            // a_N: first dropped coefficient. Each remaining term is at most
            // aₙ/(π(n + 1/2)) and aₙ ≤ a_N ((N + 2 - α)/(n + 2 - α))^{2 - 2α}.
            let n = n_terms as f64;
            let tail_bound = a.abs() * (n + 2.0 - alpha).powf(2.0 - 2.0 * alpha) * (n + 0.5).powf(2.0 * alpha - 2.0)
                / (PI * (2.0 - 2.0 * alpha));
            SpectralDensity::new(SpectralForm::CauchySeries { terms, tail_bound })
        }
        KernelShape::Tabulated { .. } => Err(IdtError::NoClosedForm),
    }
}

pub fn table_spectral_density(phi: &PhiKernel, y: f64) -> Result<f64> {
    Ok(table_spectral(phi)?.eval(y))
}

fn averaged(partials: &[f64]) -> f64 {
    let mut v = partials.to_vec();
    while v.len() > 1 {
        v = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    v[0]
}

/// `∫ g(y) cos(xy) dy` by quadrature.
///
/// The half line is cut at the zeros of `cos(xy)`; the alternating partial
/// sums are accelerated by repeated averaging. Integration stops at the
/// point where `g` falls below `1e-12` of its peak.
pub fn fourier_by_quadrature(density: &SpectralDensity, x: f64) -> Result<f64> {
    let x = x.abs();
    let g = |y: f64| density.eval(y);
    let end = density.support_end();
    let opts = QuadOptions::with_tol(1e-15, 1e-12);
    if x == 0.0 {
        let q = if let SpectralForm::Tabulated { grid, .. } = &density.form {
            integrate_pieces(g, grid, opts)
        } else {
            integrate_to_infinity(g, 0.0, opts)
        };
        return Ok(2.0 * q.require("spectral mass")?);
    }
    let f = |y: f64| g(y) * (x * y).cos();
    let half = PI / x;
    let mut partials: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut lo = 0.0;
    let mut prev_estimate = f64::NAN;
    for k in 0..MAX_PIECES {
        let hi = ((k as f64 + 0.5) * half).min(end);
        let mut cuts = vec![lo, hi];
        if let SpectralForm::Tabulated { grid, .. } = &density.form {
            cuts.extend(grid.iter().copied().filter(|&p| p > lo && p < hi));
        }
        sum += integrate_pieces(f, &cuts, opts).require("spectral fourier piece")?;
        if hi >= end {
            return Ok(2.0 * sum);
        }
        partials.push(sum);
        lo = hi;
        if partials.len() > AVERAGING_DEPTH {
            let estimate = averaged(&partials[partials.len() - AVERAGING_DEPTH - 1..]);
            if (estimate - prev_estimate).abs() <= 1e-14 * estimate.abs().max(density.peak()) {
                return Ok(2.0 * estimate);
            }
            prev_estimate = estimate;
        }
    }
    Err(IdtError::QuadratureFailure(format!("spectral fourier transform at x = {x} did not settle")))
}

/// `c(s, t) = √(st) ∫ g(y) e^{iy|ln(s/t)|} dy`, zero when either time is zero.
pub fn closed_covariance(density: &SpectralDensity, s: f64, t: f64) -> Result<f64> {
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    Ok((s * t).sqrt() * fourier_by_quadrature(density, (s.max(t) / s.min(t)).ln())?)
}

/// CSV with header `y,density`.
pub fn write_density_csv<W: Write>(density: &SpectralDensity, ys: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "y,density")?;
    for &y in ys {
        writeln!(out, "{},{}", float17(y), float17(density.eval(y)))?;
    }
    Ok(())
}
