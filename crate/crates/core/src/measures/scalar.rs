use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::constructions::RadialMeasure;
use crate::error::{invalid, IdtError, Result};
use crate::quadrature::{integrate_pieces, integrate_to_infinity, QuadOptions, QuadResult};

/// Values beyond this magnitude are treated as divergence.
const OVERFLOW_GUARD: f64 = 1e300;

/// Density of an absolutely continuous Lévy measure on `(0, ∞)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyDensity {
    /// `coefficient · x^exponent`.
    Power { coefficient: f64, exponent: f64 },
    /// `shape_rate · e^{-x/scale} / x`.
    GammaLevy { shape_rate: f64, scale: f64 },
    /// Linear between nodes, zero outside.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for LevyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyDensity::Power { coefficient, exponent } => {
                f.debug_struct("Power").field("coefficient", coefficient).field("exponent", exponent).finish()
            }
            LevyDensity::GammaLevy { shape_rate, scale } => {
                f.debug_struct("GammaLevy").field("shape_rate", shape_rate).field("scale", scale).finish()
            }
            LevyDensity::Tabulated { grid, values } => {
                f.debug_struct("Tabulated").field("grid", grid).field("values", values).finish()
            }
            LevyDensity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LevyDensity {
    fn eval(&self, x: f64) -> f64 {
        match self {
            LevyDensity::Power { coefficient, exponent } => coefficient * x.powf(*exponent),
            LevyDensity::GammaLevy { shape_rate, scale } => shape_rate * (-x / scale).exp() / x,
            LevyDensity::Tabulated { grid, values } => {
                if x < grid[0] || x > grid[grid.len() - 1] {
                    return 0.0;
                }
                let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
                let w = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
                values[k - 1] + w * (values[k] - values[k - 1])
            }
            LevyDensity::Custom(f) => f(x),
        }
    }

    fn nodes(&self) -> Vec<f64> {
        match self {
            LevyDensity::Tabulated { grid, .. } => grid.clone(),
            _ => Vec::new(),
        }
    }
}

/// A Lévy measure `ν` on `(0, ∞)`.
///
/// `formal` densities skip the integrability check; only pointwise density
/// identities and compactly supported test functions are meaningful for them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLevyMeasure {
    /// `[location, weight]` pairs.
    PointMasses { atoms: Vec<(f64, f64)> },
    Density {
        density: LevyDensity,
        /// `[lo, hi]`; `null` as the upper end stands for `+∞`.
        #[serde(with = "open_support")]
        support: (f64, f64),
        #[serde(default)]
        formal: bool,
    },
}

mod open_support {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        let hi = if v.1 == f64::INFINITY { None } else { Some(v.1) };
        (v.0, hi).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (lo, hi) = <(f64, Option<f64>)>::deserialize(d)?;
        Ok((lo, hi.unwrap_or(f64::INFINITY)))
    }
}

impl ScalarLevyMeasure {
    pub fn point(x: f64, weight: f64) -> Result<Self> {
        let m = ScalarLevyMeasure::PointMasses { atoms: vec![(x, weight)] };
        m.validate()?;
        Ok(m)
    }

    pub fn density(density: LevyDensity, support: (f64, f64), formal: bool) -> Result<Self> {
        let m = ScalarLevyMeasure::Density { density, support, formal };
        m.validate()?;
        Ok(m)
    }

    /// The formal density `dx / √(2πx)` on `(0, ∞)`.
    pub fn inverse_sqrt() -> Self {
        ScalarLevyMeasure::Density {
            density: LevyDensity::Power { coefficient: 1.0 / (2.0 * std::f64::consts::PI).sqrt(), exponent: -0.5 },
            support: (0.0, f64::INFINITY),
            formal: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarLevyMeasure::PointMasses { atoms } => {
                if atoms.is_empty() {
                    return Err(invalid("point-mass Lévy measure needs at least one atom"));
                }
                for &(x, w) in atoms {
                    if !(x > 0.0 && x.is_finite() && w > 0.0 && w.is_finite()) {
                        return Err(invalid(format!("Lévy atom ({x}, {w}) needs x > 0 and weight > 0")));
                    }
                }
                Ok(())
            }
            ScalarLevyMeasure::Density { density, support: (lo, hi), formal } => {
                if !(*lo >= 0.0 && lo < hi && !lo.is_nan() && !hi.is_nan()) {
                    return Err(invalid(format!("Lévy density support ({lo}, {hi}) must satisfy 0 <= lo < hi")));
                }
                if let LevyDensity::Tabulated { grid, values } = density {
                    if grid.len() < 2 || grid.len() != values.len() || grid.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(invalid("tabulated Lévy density needs a strictly increasing grid with matching values"));
                    }
                    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(invalid("tabulated Lévy density values must be finite and >= 0"));
                    }
                }
                if *formal {
                    return Ok(());
                }
                self.check_integrability(density, *lo, *hi)
            }
        }
    }

    fn check_integrability(&self, density: &LevyDensity, lo: f64, hi: f64) -> Result<()> {
        if let LevyDensity::Power { exponent, .. } = density {
            if lo == 0.0 && *exponent <= -3.0 {
                return Err(IdtError::NonIntegrableJumpDensity(format!("x^{exponent} is not integrable against x² at 0")));
            }
            if hi.is_infinite() && *exponent >= -1.0 {
                return Err(IdtError::NonIntegrableJumpDensity(format!("x^{exponent} has infinite mass at infinity")));
            }
            return Ok(());
        }
        let opts = QuadOptions::with_tol(1e-12, 1e-8);
        let mut pts = density.nodes();
        pts.extend([lo, hi.min(1.0).max(lo)]);
        pts.retain(|&p| p >= lo && p <= hi.min(1.0).max(lo));
        let near = integrate_pieces(|x: f64| x * x * density.eval(x), &pts, opts);
        let far = if hi <= 1.0 {
            QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true }
        } else if hi.is_finite() {
            let mut pts = density.nodes();
            pts.extend([lo.max(1.0), hi]);
            pts.retain(|&p| p >= lo.max(1.0) && p <= hi);
            integrate_pieces(|x: f64| density.eval(x), &pts, opts)
        } else {
            integrate_to_infinity(|x: f64| density.eval(x), lo.max(1.0), opts)
        };
        let total = near.value + far.value;
        if !(near.converged && far.converged && total.is_finite() && total < OVERFLOW_GUARD) {
            return Err(IdtError::NonIntegrableJumpDensity(format!("∫ min(1, x²) ν(dx) ≈ {total:e} did not converge")));
        }
        Ok(())
    }
}

/// A test function `f` on `ℝ` with `f(0) = 0`, optionally known to vanish
/// outside `[support.0, support.1]`.
#[derive(Clone)]
pub struct LevyTestFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: Option<(f64, f64)>,
}

impl fmt::Debug for LevyTestFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyTestFn").field("support", &self.support).finish_non_exhaustive()
    }
}

impl LevyTestFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let value = f(0.0);
        if value != 0.0 {
            return Err(IdtError::NonZeroAtOrigin { v: 0.0, value });
        }
        Ok(Self { f: Arc::new(f), support: None })
    }

    pub fn supported_on(f: impl Fn(f64) -> f64 + Send + Sync + 'static, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(invalid(format!("test function support [{a}, {b}] is empty")));
        }
        let mut t = Self::new(f)?;
        t.support = Some((a, b));
        Ok(t)
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }
}

/// Tolerances of the nested quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformQuad {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for TransformQuad {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10 }
    }
}

impl TransformQuad {
    fn opts(&self) -> QuadOptions {
        QuadOptions::with_tol(self.abs_tol, self.rel_tol)
    }
}

fn guard(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value.abs() < OVERFLOW_GUARD {
        Ok(value)
    } else {
        Err(IdtError::DivergentTransform(format!("{what} evaluates to {value:e}")))
    }
}

/// `∫ ν(dx) f(scale · x)`.
fn scaled_integral(nu: &ScalarLevyMeasure, f: &LevyTestFn, scale: f64, quad: &TransformQuad) -> Result<f64> {
    if scale == 0.0 {
        return Ok(0.0);
    }
    match nu {
        ScalarLevyMeasure::PointMasses { atoms } => Ok(atoms.iter().map(|&(x, w)| w * f.eval(scale * x)).sum()),
        ScalarLevyMeasure::Density { density, support: (lo, hi), formal } => {
            let (mut a, mut b) = (*lo, *hi);
            match f.support {
                Some((fa, fb)) => {
                    a = a.max(fa / scale);
                    b = b.min(fb / scale);
                }
                None if *formal => {
                    return Err(IdtError::DivergentTransform(
                        "formal Lévy density needs a compactly supported test function".into(),
                    ))
                }
                None => {}
            }
            if b <= a {
                return Ok(0.0);
            }
            let g = |x: f64| density.eval(x) * f.eval(scale * x);
            let q = if b.is_finite() {
                let mut pts = density.nodes();
                pts.extend([a, b]);
                pts.retain(|&p| p >= a && p <= b);
                integrate_pieces(g, &pts, quad.opts())
            } else {
                integrate_to_infinity(g, a, quad.opts())
            };
            guard(q.value, "inner Lévy integral")?;
            q.require("inner Lévy integral")
        }
    }
}

/// `∫ ν^{(μ)}(dy) f(y) = ∫_0^H dh ∫ ν(dx) f(μ([h, ∞)) x)` with `H` the upper
/// end of the support of `μ`.
pub fn transform_levy_measure(nu: &ScalarLevyMeasure, mu: &RadialMeasure, f: &LevyTestFn, quad: &TransformQuad) -> Result<f64> {
    nu.validate()?;
    mu.validate()?;
    let top = mu.support_max();
    if !top.is_finite() {
        return Err(IdtError::UnsupportedMeasureSupport("unbounded support".into()));
    }
    let failure: RefCell<Option<IdtError>> = RefCell::new(None);
    let inner = |h: f64| match scaled_integral(nu, f, mu.tail(h), quad) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let mut pts = mu.breakpoints();
    pts.retain(|&p| p <= top);
    let q = integrate_pieces(inner, &pts, quad.opts());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    guard(q.value, "transformed Lévy measure")?;
    q.require("transformed Lévy measure")
}

/// The same integral for atomic `μ` through the increment decomposition
/// `Σ wᵢ X_{uᵢ} = Σ_k T_k (X_{u_(k)} - X_{u_(k-1)})`, where `T_k` is the tail
/// of `μ` at the `k`-th atom location.
pub fn increment_decomposition(nu: &ScalarLevyMeasure, mu: &RadialMeasure, f: &LevyTestFn, quad: &TransformQuad) -> Result<f64> {
    nu.validate()?;
    mu.validate()?;
    let RadialMeasure::PointMasses { atoms } = mu else {
        return Err(invalid("increment decomposition needs an atomic radial measure"));
    };
    let mut locs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    locs.sort_by(f64::total_cmp);
    locs.dedup();
    let mut prev = 0.0;
    let mut total = 0.0;
    for u in locs {
        let tail: f64 = atoms.iter().filter(|a| a.0 >= u).map(|a| a.1).sum();
        total += (u - prev) * scaled_integral(nu, f, tail, quad)?;
        prev = u;
    }
    guard(total, "increment decomposition")
}

/// Density of `ν^{(μ)}` for `μ(du) = (du/u) 1_{[0,1]}`: `∫ ν(dx) x^{-1} e^{-v/x}`.
pub fn exp_mixture_density(nu: &ScalarLevyMeasure, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("exp mixture needs v > 0, got {v}")));
    }
    nu.validate()?;
    match nu {
        ScalarLevyMeasure::PointMasses { atoms } => guard(atoms.iter().map(|&(x, w)| w / x * (-v / x).exp()).sum(), "exp mixture"),
        ScalarLevyMeasure::Density { density, support: (lo, hi), .. } => {
            let g = |x: f64| if x > 0.0 { density.eval(x) * (-v / x).exp() / x } else { 0.0 };
            let opts = QuadOptions::with_tol(1e-14, 1e-10);
            let mut pts = density.nodes();
            pts.extend([*lo, v.clamp(*lo, *hi)]);
            if hi.is_finite() {
                pts.push(*hi);
            }
            pts.retain(|&p| p >= *lo && p <= *hi);
            let head = integrate_pieces(g, &pts, opts);
            let top = pts.iter().copied().fold(*lo, f64::max);
            let tail = if hi.is_finite() {
                QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true }
            } else {
                integrate_to_infinity(g, top, opts)
            };
            let value = guard(head.value + tail.value, "exp mixture")?;
            if !(head.converged && tail.converged) {
                return Err(IdtError::DivergentTransform(format!("exp mixture at v = {v} did not settle")));
            }
            Ok(value)
        }
    }
}

/// Closed forms of [`exp_mixture_density`]: exact sums for atoms and
/// `c v^p Γ(-p)` for `c x^p` on `(0, ∞)` with `p < 0`.
pub fn exp_mixture_closed_form(nu: &ScalarLevyMeasure, v: f64) -> Option<f64> {
    match nu {
        ScalarLevyMeasure::PointMasses { atoms } => Some(atoms.iter().map(|&(x, w)| w / x * (-v / x).exp()).sum()),
        ScalarLevyMeasure::Density { density: LevyDensity::Power { coefficient, exponent }, support, .. }
            if support.0 == 0.0 && support.1 == f64::INFINITY && *exponent < 0.0 =>
        {
            Some(coefficient * v.powf(*exponent) * gamma(-exponent))
        }
        _ => None,
    }
}
