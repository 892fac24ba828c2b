use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RadialMeasure;
use crate::error::{IdtError, Result};
use crate::parallel;
use crate::process_models::{PathEnsemble, SamplePath, TimeGrid};

/// Midpoint nodes used for absolutely continuous radial measures.
pub const DEFAULT_TRANSFORM_NODES: usize = 4096;

/// `X^{(μ)}_t = ∫ μ(du) X_{ut}` evaluated pathwise with càdlàg lookups.
///
/// Point masses are evaluated exactly. `LogUniform` uses the midpoint rule in
/// `s = ln u` (where `du/u = ds`); `Density` uses the midpoint rule in `u`.
pub fn integral_transform(base: &PathEnsemble, mu: &RadialMeasure, out_grid: &TimeGrid) -> Result<PathEnsemble> {
    integral_transform_with(base, mu, out_grid, DEFAULT_TRANSFORM_NODES)
}

pub fn integral_transform_with(
    base: &PathEnsemble,
    mu: &RadialMeasure,
    out_grid: &TimeGrid,
    nodes: usize,
) -> Result<PathEnsemble> {
    mu.validate()?;
    if nodes == 0 {
        return Err(IdtError::InvalidParameter("transform needs at least one node".into()));
    }
    let u_max = mu.support_max();
    if !u_max.is_finite() {
        return Err(IdtError::UnsupportedMeasureSupport("unbounded support".into()));
    }
    if let RadialMeasure::LogUniform { a, .. } = mu {
        if *a <= 0.0 {
            return Err(IdtError::UnsupportedMeasureSupport("log-uniform measure with a = 0 has infinite mass at the origin".into()));
        }
    }
    let required = u_max * out_grid.last();
    if base.grid.locate(required).is_err() {
        return Err(IdtError::GridCoverage { required, available: base.grid.last() });
    }

    // Quadrature rows are shared by all paths: (base index, weight) per output time.
    let rows: Vec<Vec<(usize, f64)>> = out_grid
        .times()
        .iter()
        .map(|&t| transform_row(&base.grid, mu, t, nodes))
        .collect::<Result<_>>()?;

    let out = Arc::new(out_grid.clone());
    let paths = parallel::try_map_indices(base.m(), |i| {
        let p = &base.paths[i];
        let values = rows.iter().map(|row| row.iter().map(|&(k, w)| w * p.values[k]).sum()).collect();
        SamplePath::new(out.clone(), values, None)
    })?;
    PathEnsemble::new(out, paths, base.seed_info)
}

fn transform_row(grid: &TimeGrid, mu: &RadialMeasure, t: f64, nodes: usize) -> Result<Vec<(usize, f64)>> {
    if t == 0.0 {
        return Ok(Vec::new());
    }
    let mut row: Vec<(usize, f64)> = Vec::new();
    let mut push = |k: usize, w: f64| match row.last_mut() {
        Some(last) if last.0 == k => last.1 += w,
        _ => row.push((k, w)),
    };
    match mu {
        RadialMeasure::PointMasses { atoms } => {
            let mut sorted = atoms.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (u, w) in sorted {
                push(grid.locate(u * t)?, w);
            }
        }
        RadialMeasure::LogUniform { a, b } => {
            let (s0, s1) = (a.ln(), b.ln());
            let ds = (s1 - s0) / nodes as f64;
            for j in 0..nodes {
                let u = (s0 + (j as f64 + 0.5) * ds).exp();
                push(grid.locate(u * t)?, ds);
            }
        }
        RadialMeasure::Density { grid: g, .. } => {
            let (u0, u1) = (g[0], g[g.len() - 1]);
            let du = (u1 - u0) / nodes as f64;
            for j in 0..nodes {
                let u = u0 + (j as f64 + 0.5) * du;
                let dens = mu.density(u).unwrap_or(0.0);
                if dens > 0.0 {
                    push(grid.locate(u * t)?, dens * du);
                }
            }
        }
    }
    Ok(row)
}

/// Jump functional `f(v, x)` with `f(·, 0) ≡ 0`.
#[derive(Clone)]
pub struct JumpFunctional {
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for JumpFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("JumpFunctional(..)")
    }
}

const ZERO_PROBES: [f64; 8] = [0.0, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3];

impl JumpFunctional {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        for v in ZERO_PROBES {
            let value = f(v, 0.0);
            if value != 0.0 {
                return Err(IdtError::NonZeroAtOrigin { v, value });
            }
        }
        Ok(Self { f: Arc::new(f) })
    }

    pub fn eval(&self, v: f64, x: f64) -> f64 {
        (self.f)(v, x)
    }
}

/// Serializable jump functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpFunctionalSpec {
    /// `f(v, x) = x`
    Identity {},
    /// `f(v, x) = 0`
    Zero {},
    /// `f(v, x) = x 1_{v ≤ v_max}`
    WindowedIdentity { v_max: f64 },
    /// `f(v, x) = 1_{v ≤ v_max} 1_{x ≠ 0}`: counts jumps.
    WindowedCount { v_max: f64 },
}

impl JumpFunctionalSpec {
    pub fn build(&self) -> Result<JumpFunctional> {
        match *self {
            JumpFunctionalSpec::Identity {} => JumpFunctional::new(|_, x| x),
            JumpFunctionalSpec::Zero {} => JumpFunctional::new(|_, _| 0.0),
            JumpFunctionalSpec::WindowedIdentity { v_max } => {
                JumpFunctional::new(move |v, x| if v <= v_max { x } else { 0.0 })
            }
            JumpFunctionalSpec::WindowedCount { v_max } => {
                JumpFunctional::new(move |v, x| if v <= v_max && x != 0.0 { 1.0 } else { 0.0 })
            }
        }
    }
}

/// `X^f_t = Σ_{jumps (s, Δ)} f(s/t, Δ)` for `t > 0`, and `0` at `t = 0`.
pub fn jump_transform(base: &PathEnsemble, f: &JumpFunctional, out_grid: &TimeGrid) -> Result<PathEnsemble> {
    if !base.has_jumps() {
        return Err(IdtError::JumpsUnavailable);
    }
    let out = Arc::new(out_grid.clone());
    let paths = parallel::try_map_indices(base.m(), |i| {
        let jumps = base.paths[i].jumps.as_deref().unwrap_or(&[]);
        let values = out
            .times()
            .iter()
            .map(|&t| if t == 0.0 { 0.0 } else { jumps.iter().map(|&(s, x)| f.eval(s / t, x)).sum() })
            .collect();
        SamplePath::new(out.clone(), values, None)
    })?;
    PathEnsemble::new(out, paths, base.seed_info)
}
