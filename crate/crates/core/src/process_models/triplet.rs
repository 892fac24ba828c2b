use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};

use super::stable;
use crate::error::{invalid, IdtError, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Jump-size law of a compound Poisson part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDist {
    PointMass { x0: f64 },
    Exponential { mean: f64 },
    Uniform { a: f64, b: f64 },
    /// Piecewise-linear quantile function: `values[k]` is the quantile at probability `grid[k]`.
    TabulatedQuantile { grid: Vec<f64>, values: Vec<f64> },
}

impl JumpDist {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpDist::PointMass { x0 } => {
                if !x0.is_finite() || *x0 == 0.0 {
                    return Err(invalid(format!("point-mass jump must be finite and nonzero, got {x0}")));
                }
            }
            JumpDist::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(invalid(format!("exponential jump mean must be positive, got {mean}")));
                }
            }
            JumpDist::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(invalid(format!("uniform jump needs finite a < b, got [{a}, {b}]")));
                }
            }
            JumpDist::TabulatedQuantile { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(invalid("tabulated quantile needs matching grid/values with at least two points"));
                }
                if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
                    return Err(invalid("tabulated quantile grid must run from 0 to 1"));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("tabulated quantile grid must be strictly increasing"));
                }
                if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] < w[0]) {
                    return Err(invalid("tabulated quantiles must be finite and nondecreasing"));
                }
                if values.windows(2).any(|w| w[0] == 0.0 && w[1] == 0.0) {
                    return Err(invalid("tabulated quantile puts positive mass on a zero jump"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpDist::PointMass { x0 } => *x0,
            JumpDist::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            JumpDist::Uniform { a, b } => {
                let u: f64 = Open01.sample(rng);
                a + (b - a) * u
            }
            JumpDist::TabulatedQuantile { grid, values } => {
                let u: f64 = Open01.sample(rng);
                let k = grid.partition_point(|&p| p <= u).clamp(1, grid.len() - 1);
                let (p0, p1) = (grid[k - 1], grid[k]);
                values[k - 1] + (values[k] - values[k - 1]) * (u - p0) / (p1 - p0)
            }
        }
    }

    /// Characteristic function `E[exp(izJ)]`.
    pub fn cf(&self, z: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            JumpDist::PointMass { x0 } => Complex64::from_polar(1.0, z * x0),
            JumpDist::Exponential { mean } => 1.0 / (1.0 - i * z * mean),
            JumpDist::Uniform { a, b } => segment_cf(z, *a, *b),
            JumpDist::TabulatedQuantile { grid, values } => grid
                .windows(2)
                .zip(values.windows(2))
                .map(|(p, q)| (p[1] - p[0]) * segment_cf(z, q[0], q[1]))
                .sum(),
        }
    }
}

/// Mean of `exp(izx)` for `x` uniform on `[a, b]` (`a == b` allowed).
fn segment_cf(z: f64, a: f64, b: f64) -> Complex64 {
    let d = z * (b - a);
    if d.abs() < 1e-8 {
        return Complex64::from_polar(1.0, z * 0.5 * (a + b)) * (1.0 - d * d / 24.0);
    }
    let i = Complex64::i();
    (Complex64::from_polar(1.0, z * b) - Complex64::from_polar(1.0, z * a)) / (i * d)
}

/// Jump component of a Lévy triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpPart {
    None {},
    CompoundPoisson { rate: f64, jump_dist: JumpDist },
    /// One-sided stable subordinator, `E[exp(-λX_1)] = exp(-(scale·λ)^α)`.
    StableSubordinator { alpha: f64, scale: f64 },
    /// Symmetric stable, `E[exp(izX_1)] = exp(-(scale·|z|)^α)`.
    SymmetricStable { alpha: f64, scale: f64 },
    /// Gamma process, `X_t ~ Gamma(shape_rate·t, scale)`.
    Gamma { shape_rate: f64, scale: f64 },
    /// Lévy density tabulated on a grid, linear between nodes and 0 outside.
    /// Analytic use only.
    TabulatedDensity { grid: Vec<f64>, values: Vec<f64> },
}

/// Drift, Gaussian variance per unit time and jump part of a Lévy process.
///
/// The exponent uses the truncation `1_{|x|≤1}` for tabulated densities only;
/// parametric jump parts carry their natural (uncompensated) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    pub drift: f64,
    pub gaussian_var: f64,
    pub jump_part: JumpPart,
}

impl LevyTriplet {
    pub fn new(drift: f64, gaussian_var: f64, jump_part: JumpPart) -> Result<Self> {
        let t = Self { drift, gaussian_var, jump_part };
        t.validate()?;
        Ok(t)
    }

    pub fn brownian() -> Self {
        Self { drift: 0.0, gaussian_var: 1.0, jump_part: JumpPart::None {} }
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        Self::new(0.0, 0.0, JumpPart::SymmetricStable { alpha: 1.0, scale })
    }

    pub fn compound_poisson(rate: f64, jump_dist: JumpDist) -> Result<Self> {
        Self::new(0.0, 0.0, JumpPart::CompoundPoisson { rate, jump_dist })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(invalid("drift must be finite"));
        }
        if !(self.gaussian_var.is_finite() && self.gaussian_var >= 0.0) {
            return Err(invalid(format!("gaussian_var must be finite and >= 0, got {}", self.gaussian_var)));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match &self.jump_part {
            JumpPart::None {} => Ok(()),
            JumpPart::CompoundPoisson { rate, jump_dist } => {
                positive("rate", *rate)?;
                jump_dist.validate()
            }
            JumpPart::StableSubordinator { alpha, scale } => {
                stable::check_one_sided_index(*alpha)?;
                positive("scale", *scale)
            }
            JumpPart::SymmetricStable { alpha, scale } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(IdtError::BadStableIndex { alpha: *alpha, range: "(0, 2)" });
                }
                positive("scale", *scale)
            }
            JumpPart::Gamma { shape_rate, scale } => {
                positive("shape_rate", *shape_rate)?;
                positive("scale", *scale)
            }
            JumpPart::TabulatedDensity { grid, values } => check_tabulated_density(grid, values),
        }
    }

    /// Lévy–Khintchine exponent `ψ(z)` with `E[exp(izX_t)] = exp(tψ(z))`.
    pub fn char_exponent(&self, z: f64) -> Result<Complex64> {
        if !z.is_finite() {
            return Err(invalid(format!("probe z = {z} must be finite")));
        }
        let i = Complex64::i();
        let base = i * z * self.drift - 0.5 * self.gaussian_var * z * z;
        let jumps = match &self.jump_part {
            JumpPart::None {} => Complex64::new(0.0, 0.0),
            JumpPart::CompoundPoisson { rate, jump_dist } => *rate * (jump_dist.cf(z) - 1.0),
            JumpPart::StableSubordinator { alpha, scale } => stable::positive_log_cf(*alpha, scale * z),
            JumpPart::SymmetricStable { alpha, scale } => stable::symmetric_log_cf(*alpha, scale * z),
            JumpPart::Gamma { shape_rate, scale } => -*shape_rate * (1.0 - i * scale * z).ln(),
            JumpPart::TabulatedDensity { grid, values } => tabulated_exponent(grid, values, z)?,
        };
        Ok(base + jumps)
    }
}

fn density_at(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let w = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
    values[k - 1] + w * (values[k] - values[k - 1])
}

fn breakpoints(grid: &[f64]) -> Vec<f64> {
    let mut pts = grid.to_vec();
    for c in [-1.0, 0.0, 1.0] {
        if c > grid[0] && c < grid[grid.len() - 1] {
            pts.push(c);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn check_tabulated_density(grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid.len() != values.len() {
        return Err(invalid("tabulated density needs matching grid/values with at least two points"));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tabulated density grid must be finite and strictly increasing"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(IdtError::NonIntegrableJumpDensity("density values must be finite and >= 0".into()));
    }
    let pts = breakpoints(grid);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let r = integrate(|x| x.abs().min(1.0).powi(2) * density_at(grid, values, x), w[0], w[1], QuadOptions::default());
        total += r.value;
    }
    if !total.is_finite() {
        return Err(IdtError::NonIntegrableJumpDensity(format!("∫min(1,x²)ν(dx) = {total}")));
    }
    Ok(())
}

fn tabulated_exponent(grid: &[f64], values: &[f64], z: f64) -> Result<Complex64> {
    let pts = breakpoints(grid);
    let opts = QuadOptions::with_tol(1e-13, 1e-11);
    let mut re = 0.0;
    let mut im = 0.0;
    for w in pts.windows(2) {
        let r = integrate(|x| ((z * x).cos() - 1.0) * density_at(grid, values, x), w[0], w[1], opts);
        let s = integrate(
            |x| {
                let comp = if x.abs() <= 1.0 { z * x } else { 0.0 };
                ((z * x).sin() - comp) * density_at(grid, values, x)
            },
            w[0],
            w[1],
            opts,
        );
        re += r.require("tabulated exponent").map_err(|e| IdtError::NonIntegrableJumpDensity(e.to_string()))?;
        im += s.require("tabulated exponent").map_err(|e| IdtError::NonIntegrableJumpDensity(e.to_string()))?;
    }
    Ok(Complex64::new(re, im))
}
