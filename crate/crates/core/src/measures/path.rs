use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scalar::ScalarLevyMeasure;
use crate::constructions::PhiKernel;
use crate::error::{invalid, IdtError, Result};
use crate::quadrature::{integrate_pieces, integrate_to_infinity, QuadOptions, QuadResult};

/// Most probe times a path functional may read.
pub const MAX_PROBES: usize = 8;

/// One weighted càdlàg path, stored as knots with previous-value evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathAtom {
    pub weight: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PathAtom {
    pub fn new(weight: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let a = Self { weight, times, values };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(invalid(format!("path atom weight must be positive and finite, got {}", self.weight)));
        }
        if self.times.is_empty() || self.times.len() != self.values.len() || self.times[0] != 0.0 {
            return Err(invalid("path atom needs matching times/values starting at time 0"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) || self.times.iter().chain(&self.values).any(|x| !x.is_finite()) {
            return Err(invalid("path atom times must be strictly increasing and all entries finite"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Previous-value evaluation on `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
            return Err(IdtError::HorizonExceeded { time: t, horizon });
        }
        let k = self.times.partition_point(|&x| x <= t * (1.0 + 1e-14));
        Ok(self.values[k.max(1) - 1])
    }
}

/// Finitely supported measure on path space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretePathMeasure {
    pub atoms: Vec<PathAtom>,
    /// Largest u-cell width when the measure comes from [`lift_path_measure`].
    #[serde(skip)]
    pub u_resolution: Option<f64>,
}

impl DiscretePathMeasure {
    pub fn new(atoms: Vec<PathAtom>) -> Result<Self> {
        for a in &atoms {
            a.validate()?;
        }
        Ok(Self { atoms, u_resolution: None })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        Self::new(m.atoms)
    }

    /// Smallest horizon over atoms, the range on which every atom is evaluable.
    pub fn horizon(&self) -> f64 {
        self.atoms.iter().map(PathAtom::horizon).fold(f64::INFINITY, f64::min)
    }

    /// `∫ M(dy) F(y(scale ·))`.
    pub fn integrate(&self, functional: &PathFunctional, scale: f64) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            total += a.weight * functional.eval(|t| a.value_at(scale * t))?;
        }
        Ok(total)
    }
}

/// Nonnegative functional `F(y) = g(y(t₁), …, y(t_k))` with `k ≤ 8`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathFunctional {
    /// `1_{y(time) > threshold}`
    Indicator {
        time: f64,
        #[serde(default)]
        threshold: f64,
    },
    /// `y(time)`, which must be nonnegative where evaluated.
    Value { time: f64 },
    /// `Σ y(tᵢ)²`
    SumSquares { times: Vec<f64> },
    #[serde(skip)]
    Custom { times: Vec<f64>, g: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> },
}

impl fmt::Debug for PathFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PathFunctional {
    pub fn custom(times: Vec<f64>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let f = PathFunctional::Custom { times, g: Arc::new(g) };
        f.validate()?;
        Ok(f)
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            PathFunctional::Indicator { time, .. } | PathFunctional::Value { time } => vec![*time],
            PathFunctional::SumSquares { times } | PathFunctional::Custom { times, .. } => times.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PathFunctional::Indicator { time, threshold } => format!("indicator(y({time}) > {threshold})"),
            PathFunctional::Value { time } => format!("value(y({time}))"),
            PathFunctional::SumSquares { times } => format!("sum_squares({times:?})"),
            PathFunctional::Custom { times, .. } => format!("custom({times:?})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let times = self.times();
        if times.is_empty() || times.len() > MAX_PROBES {
            return Err(invalid(format!("path functional reads {} probe times; 1 to {MAX_PROBES} allowed", times.len())));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("probe times must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Applies `F` to the path `t ↦ y(t)`.
    pub fn eval(&self, y: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let v = match self {
            PathFunctional::Indicator { time, threshold } => {
                if y(*time)? > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            PathFunctional::Value { time } => y(*time)?,
            PathFunctional::SumSquares { times } => {
                let mut s = 0.0;
                for &t in times {
                    s += y(t)?.powi(2);
                }
                s
            }
            PathFunctional::Custom { times, g } => {
                let vals = times.iter().map(|&t| y(t)).collect::<Result<Vec<_>>>()?;
                g(&vals)
            }
        };
        if v < 0.0 {
            return Err(IdtError::NegativeFunctional(v));
        }
        Ok(v)
    }
}

/// `K` equal cells on `(0, U]`, as edges `0, U/K, …, U`.
pub fn uniform_u_edges(upper: f64, cells: usize) -> Result<Vec<f64>> {
    if !(upper > 0.0 && upper.is_finite()) || cells == 0 {
        return Err(invalid("u-grid needs a positive finite upper end and at least one cell"));
    }
    Ok((0..=cells).map(|k| upper * k as f64 / cells as f64).collect())
}

/// Discretised `M` with `∫ M(dy) F(y) = ∫_0^∞ du ∫ N(dy) F(y(·/u))`.
///
/// Every `N`-atom `(w, y)` and midpoint-rule cell `(uⱼ, Δuⱼ)` of `u_edges`
/// gives the atom `(w Δuⱼ, y(·/uⱼ))`, stored with knots `uⱼ τ_k`. Every lifted
/// path must be evaluable up to `horizon`, i.e. `horizon / u_min` must lie
/// within the horizon of `N`.
pub fn lift_path_measure(n: &DiscretePathMeasure, u_edges: &[f64], horizon: f64) -> Result<DiscretePathMeasure> {
    if u_edges.len() < 2 || u_edges[0] < 0.0 || u_edges.windows(2).any(|w| w[1] <= w[0]) || u_edges.iter().any(|u| !u.is_finite()) {
        return Err(invalid("u-grid edges must be finite, nonnegative and strictly increasing"));
    }
    let mids: Vec<(f64, f64)> = u_edges.windows(2).map(|w| (0.5 * (w[0] + w[1]), w[1] - w[0])).collect();
    let u_min = mids[0].0;
    let need = horizon / u_min;
    if need > n.horizon() * (1.0 + 1e-12) {
        return Err(IdtError::HorizonExceeded { time: need, horizon: n.horizon() });
    }
    let mut atoms = Vec::with_capacity(n.atoms.len() * mids.len());
    for a in &n.atoms {
        for &(u, du) in &mids {
            atoms.push(PathAtom {
                weight: a.weight * du,
                times: a.times.iter().map(|t| u * t).collect(),
                values: a.values.clone(),
            });
        }
    }
    let width = mids.iter().map(|m| m.1).fold(0.0, f64::max);
    Ok(DiscretePathMeasure { atoms, u_resolution: Some(width) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalResidual {
    pub functional: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathScalingReport {
    pub n: u32,
    pub residuals: Vec<FunctionalResidual>,
    pub max_residual: f64,
    pub tol: f64,
    pub u_resolution: Option<f64>,
    pub pass: bool,
    /// Where the Gaussian half of the scaling identity is checked.
    pub gaussian_note: String,
}

/// Residuals of `∫ M(dy) F(y(n·)) = n ∫ M(dy) F(y)`, each relative to `1 + |rhs|`.
pub fn idt_scaling_check(m: &DiscretePathMeasure, n: u32, functionals: &[PathFunctional], tol: f64) -> Result<PathScalingReport> {
    if n < 1 {
        return Err(invalid("scaling factor n must be at least 1"));
    }
    let nf = n as f64;
    let mut residuals = Vec::with_capacity(functionals.len());
    for f in functionals {
        f.validate()?;
        let reach = f.times().into_iter().fold(0.0, f64::max) * nf;
        if reach > m.horizon() * (1.0 + 1e-12) {
            return Err(IdtError::HorizonExceeded { time: reach, horizon: m.horizon() });
        }
        let lhs = m.integrate(f, nf)?;
        let rhs = nf * m.integrate(f, 1.0)?;
        let residual = if n == 1 { 0.0 } else { (lhs - rhs).abs() / (1.0 + rhs.abs()) };
        residuals.push(FunctionalResidual { functional: f.label(), lhs, rhs, residual });
    }
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(PathScalingReport {
        n,
        max_residual,
        tol,
        u_resolution: m.u_resolution,
        pass: max_residual <= tol,
        residuals,
        gaussian_note: "the Gaussian part scales through the covariance check c(ns, nt) = n c(s, t)".into(),
    })
}

/// `∫ M^{(φ)}(dy) F(y) = ∫_0^∞ du ∫ ν(dx) F(x Φ(u/·))` with `Φ(u) = ∫_u^∞ φ`.
pub fn subordinator_path_measure(nu: &ScalarLevyMeasure, phi: &PhiKernel, functional: &PathFunctional, opts: QuadOptions) -> Result<f64> {
    nu.validate()?;
    phi.validate()?;
    functional.validate()?;
    let ScalarLevyMeasure::PointMasses { atoms } = nu else {
        return Err(invalid("path measure of a subordinator is evaluated for atomic Lévy measures"));
    };
    let times = functional.times();
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let failure: RefCell<Option<IdtError>> = RefCell::new(None);
    let integrand = |u: f64| {
        let mut s = 0.0;
        for &(x, w) in atoms {
            let path = |t: f64| Ok(if t == 0.0 { 0.0 } else { x * phi.tail_integral(u / t) });
            match functional.eval(path) {
                Ok(v) => s += w * v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                }
            }
        }
        s
    };
    let mut pts = vec![0.0];
    for &t in &times {
        pts.extend(phi.breakpoints().iter().map(|b| b * t));
    }
    let end = phi.support_end() * t_max;
    let q = if end.is_finite() {
        pts.retain(|&p| p <= end);
        pts.push(end);
        integrate_pieces(integrand, &pts, opts)
    } else {
        let top = pts.iter().copied().fold(0.0, f64::max);
        let head = integrate_pieces(integrand, &pts, opts);
        let tail = integrate_to_infinity(integrand, top, opts);
        QuadResult {
            value: head.value + tail.value,
            error: head.error + tail.error,
            intervals: head.intervals + tail.intervals,
            converged: head.converged && tail.converged,
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !q.value.is_finite() {
        return Err(IdtError::DivergentTransform(format!("path measure integral evaluates to {}", q.value)));
    }
    q.require("path measure integral")
}
