use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A measure `μ` on `[0, ∞)` with finite mass on every `[ε, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialMeasure {
    /// `Σ wᵢ δ_{uᵢ}` given as `[location, weight]` pairs.
    PointMasses { atoms: Vec<(f64, f64)> },
    /// `(du/u) 1_{[a,b]}`. `a = 0` is admitted for tail computations only.
    LogUniform { a: f64, b: f64 },
    /// Density linear between grid nodes, zero outside.
    Density { grid: Vec<f64>, values: Vec<f64> },
}

impl RadialMeasure {
    pub fn point(location: f64, weight: f64) -> Self {
        RadialMeasure::PointMasses { atoms: vec![(location, weight)] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialMeasure::PointMasses { atoms } => {
                if atoms.is_empty() {
                    return Err(invalid("point-mass measure needs at least one atom"));
                }
                for &(u, w) in atoms {
                    if !(u.is_finite() && u >= 0.0 && w.is_finite() && w > 0.0) {
                        return Err(invalid(format!("atom ({u}, {w}) needs location >= 0 and weight > 0")));
                    }
                }
            }
            RadialMeasure::LogUniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return Err(invalid(format!("log-uniform measure needs 0 <= a < b < ∞, got [{a}, {b}]")));
                }
            }
            RadialMeasure::Density { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(invalid("density measure needs matching grid/values with at least two points"));
                }
                if grid[0] <= 0.0 || grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("density grid must lie in (0, ∞) and be strictly increasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(invalid("density values must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Essential upper end of the support.
    pub fn support_max(&self) -> f64 {
        match self {
            RadialMeasure::PointMasses { atoms } => atoms.iter().map(|a| a.0).fold(0.0, f64::max),
            RadialMeasure::LogUniform { b, .. } => *b,
            RadialMeasure::Density { grid, .. } => grid[grid.len() - 1],
        }
    }

    /// `μ([h, ∞))`.
    pub fn tail(&self, h: f64) -> f64 {
        match self {
            RadialMeasure::PointMasses { atoms } => atoms.iter().filter(|a| a.0 >= h).map(|a| a.1).sum(),
            RadialMeasure::LogUniform { a, b } => {
                if h >= *b {
                    0.0
                } else {
                    (b / h.max(*a)).ln()
                }
            }
            RadialMeasure::Density { grid, values } => {
                let mut s = 0.0;
                for k in 1..grid.len() {
                    let (g0, g1) = (grid[k - 1], grid[k]);
                    let lo = h.max(g0);
                    if g1 <= lo {
                        continue;
                    }
                    let at_lo = values[k - 1] + (values[k] - values[k - 1]) * (lo - g0) / (g1 - g0);
                    s += 0.5 * (at_lo + values[k]) * (g1 - lo);
                }
                s
            }
        }
    }

    /// Points where the tail is not smooth (atoms, support ends, density nodes).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            RadialMeasure::PointMasses { atoms } => atoms.iter().map(|a| a.0).collect(),
            RadialMeasure::LogUniform { a, b } => vec![*a, *b],
            RadialMeasure::Density { grid, .. } => grid.clone(),
        };
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Density with respect to Lebesgue measure (absolutely continuous variants).
    pub fn density(&self, u: f64) -> Option<f64> {
        match self {
            RadialMeasure::PointMasses { .. } => None,
            RadialMeasure::LogUniform { a, b } => Some(if u >= *a && u <= *b && u > 0.0 { 1.0 / u } else { 0.0 }),
            RadialMeasure::Density { grid, values } => {
                if u < grid[0] || u > grid[grid.len() - 1] {
                    return Some(0.0);
                }
                let k = grid.partition_point(|&g| g <= u).clamp(1, grid.len() - 1);
                let w = (u - grid[k - 1]) / (grid[k] - grid[k - 1]);
                Some(values[k - 1] + w * (values[k] - values[k - 1]))
            }
        }
    }
}
