use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Square-integrable kernel `φ` on `(0, ∞)` driving `G_t = ∫ φ(u/t) dB_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiKernel {
    pub shape: KernelShape,
    #[serde(default)]
    pub quad: KernelQuad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelShape {
    /// `x^{-α} 1_{x ≥ 1}`, α > 1/2.
    PowerTailUpper { alpha: f64 },
    /// `x^{-α} 1_{x ≤ 1}`, α < 1/2.
    PowerTailLower { alpha: f64 },
    /// `(1 - x)^{-α} 1_{x ≤ 1}`, α < 1/2.
    BetaEdge { alpha: f64 },
    /// Linear between nodes on `grid` (nonnegative, increasing), zero outside.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// Discretisation metadata for kernel-driven samplers and series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelQuad {
    /// Geometric mesh cells for the stochastic integral.
    pub cells: usize,
    /// Mesh ends at `T = truncation_factor · t_max`.
    pub truncation_factor: f64,
    /// First geometric node at `lower_factor · t_min`; `[0, t_min·lower_factor]` is one cell.
    pub lower_factor: f64,
    /// Largest admissible relative L² mass of `φ(·/t_max)` beyond `T`.
    pub tol: f64,
    /// Series terms kept for the beta-edge spectral density.
    pub series_terms: usize,
}

impl Default for KernelQuad {
    fn default() -> Self {
        Self { cells: 2048, truncation_factor: 1e8, lower_factor: 1e-8, tol: 1e-3, series_terms: 200 }
    }
}

/// `∫_a^b x^{-α} dx` for `0 ≤ a ≤ b`.
fn power_integral(alpha: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if alpha == 1.0 {
        (b / a).ln()
    } else {
        let p = 1.0 - alpha;
        (b.powf(p) - a.powf(p)) / p
    }
}

impl PhiKernel {
    pub fn new(shape: KernelShape) -> Result<Self> {
        let k = Self { shape, quad: KernelQuad::default() };
        k.validate()?;
        Ok(k)
    }

    pub fn power_tail_upper(alpha: f64) -> Result<Self> {
        Self::new(KernelShape::PowerTailUpper { alpha })
    }

    pub fn power_tail_lower(alpha: f64) -> Result<Self> {
        Self::new(KernelShape::PowerTailLower { alpha })
    }

    pub fn beta_edge(alpha: f64) -> Result<Self> {
        Self::new(KernelShape::BetaEdge { alpha })
    }

    pub fn with_quad(mut self, quad: KernelQuad) -> Self {
        self.quad = quad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            KernelShape::PowerTailUpper { alpha } if !(*alpha > 0.5 && alpha.is_finite()) => {
                Err(invalid(format!("power_tail_upper needs alpha > 1/2, got {alpha}")))
            }
            KernelShape::PowerTailLower { alpha } | KernelShape::BetaEdge { alpha }
                if !(*alpha < 0.5 && alpha.is_finite()) =>
            {
                Err(invalid(format!("kernel needs alpha < 1/2, got {alpha}")))
            }
            KernelShape::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(invalid("tabulated kernel needs matching grid/values with at least two points"));
                }
                if grid[0] < 0.0 || grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("tabulated kernel grid must be finite, nonnegative and strictly increasing"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("tabulated kernel values must be finite"));
                }
                let norm = self.l2_norm_sq();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(invalid(format!("tabulated kernel has L² norm² {norm}")));
                }
                self.check_quad()
            }
            _ => self.check_quad(),
        }
    }

    fn check_quad(&self) -> Result<()> {
        let q = &self.quad;
        if q.cells < 2 || !(q.truncation_factor > 1.0) || !(q.lower_factor > 0.0 && q.lower_factor < 1.0) || !(q.tol > 0.0) {
            return Err(invalid(format!("invalid kernel quadrature parameters {q:?}")));
        }
        if q.series_terms == 0 {
            return Err(invalid("series_terms must be positive"));
        }
        Ok(())
    }

    pub fn is_parametric(&self) -> bool {
        !matches!(self.shape, KernelShape::Tabulated { .. })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.shape {
            KernelShape::PowerTailUpper { alpha } => {
                if x >= 1.0 {
                    x.powf(-alpha)
                } else {
                    0.0
                }
            }
            KernelShape::PowerTailLower { alpha } => {
                if x <= 1.0 {
                    // the pole at 0 carries no mass
                    let v = x.powf(-alpha);
                    if v.is_finite() { v } else { 0.0 }
                } else {
                    0.0
                }
            }
            KernelShape::BetaEdge { alpha } => {
                if x < 1.0 {
                    (1.0 - x).powf(-alpha)
                } else {
                    0.0
                }
            }
            KernelShape::Tabulated { grid, values } => {
                if x < grid[0] || x > grid[grid.len() - 1] {
                    return 0.0;
                }
                let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
                let w = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
                values[k - 1] + w * (values[k] - values[k - 1])
            }
        }
    }

    /// Points where `φ` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            KernelShape::Tabulated { grid, .. } => grid.clone(),
            _ => vec![1.0],
        }
    }

    /// Right end of the support (`∞` for the upper power tail).
    pub fn support_end(&self) -> f64 {
        match &self.shape {
            KernelShape::PowerTailUpper { .. } => f64::INFINITY,
            KernelShape::PowerTailLower { .. } | KernelShape::BetaEdge { .. } => 1.0,
            KernelShape::Tabulated { grid, .. } => grid[grid.len() - 1],
        }
    }

    /// Exact `∫_a^b φ(x) dx` for `0 ≤ a ≤ b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if b <= a {
            return 0.0;
        }
        match &self.shape {
            KernelShape::PowerTailUpper { alpha } => {
                let lo = a.max(1.0);
                if b.is_infinite() {
                    return if *alpha > 1.0 { lo.powf(1.0 - alpha) / (alpha - 1.0) } else { f64::INFINITY };
                }
                power_integral(*alpha, lo, b)
            }
            KernelShape::PowerTailLower { alpha } => power_integral(*alpha, a, b.min(1.0)),
            KernelShape::BetaEdge { alpha } => {
                let hi = b.min(1.0);
                if hi <= a {
                    return 0.0;
                }
                let p = 1.0 - alpha;
                ((1.0 - a).powf(p) - (1.0 - hi).powf(p)) / p
            }
            KernelShape::Tabulated { grid, values } => {
                let mut s = 0.0;
                for k in 1..grid.len() {
                    let (g0, g1) = (grid[k - 1], grid[k]);
                    let lo = a.max(g0);
                    let hi = b.min(g1);
                    if hi <= lo {
                        continue;
                    }
                    let slope = (values[k] - values[k - 1]) / (g1 - g0);
                    let at = |x: f64| values[k - 1] + slope * (x - g0);
                    s += 0.5 * (at(lo) + at(hi)) * (hi - lo);
                }
                s
            }
        }
    }

    /// `Φ(u) = ∫_u^∞ φ(v) dv`.
    pub fn tail_integral(&self, u: f64) -> f64 {
        self.integral(u, f64::INFINITY)
    }

    /// `∫_T^∞ φ(x)² dx`.
    pub fn l2_tail(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match &self.shape {
            KernelShape::PowerTailUpper { alpha } => t.max(1.0).powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0),
            KernelShape::PowerTailLower { alpha } => {
                if t >= 1.0 {
                    0.0
                } else {
                    power_integral(2.0 * alpha, t, 1.0)
                }
            }
            KernelShape::BetaEdge { alpha } => {
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - t).powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha)
                }
            }
            KernelShape::Tabulated { grid, values } => {
                let mut s = 0.0;
                for k in 1..grid.len() {
                    let (g0, g1) = (grid[k - 1], grid[k]);
                    let lo = t.max(g0);
                    if g1 <= lo {
                        continue;
                    }
                    let slope = (values[k] - values[k - 1]) / (g1 - g0);
                    let (p, q) = (values[k - 1] + slope * (lo - g0), values[k]);
                    // ∫ of a squared linear function over [lo, g1]
                    s += (g1 - lo) * (p * p + p * q + q * q) / 3.0;
                }
                s
            }
        }
    }

    /// `∫_0^∞ φ(x)² dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_tail(0.0)
    }
}
