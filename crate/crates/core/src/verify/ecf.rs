use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, IdtError, Result};
use crate::process_models::PathEnsemble;

/// Smallest `|ecf|` admitted on a logarithm path.
pub const CF_FLOOR: f64 = 0.05;
/// Steps used to follow the argument from `0` to a probe.
const LOG_STEPS: usize = 64;

/// Sample mean of `exp(i⟨z, X⟩)` per probe, with the covariance of the
/// estimator's real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcfEstimate {
    pub times: Vec<f64>,
    pub probes: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    /// `√((Var cos + Var sin) / m)`.
    pub std_err: Vec<f64>,
    /// `Var(Re)`, `Var(Im)`, `Cov(Re, Im)` of the estimator.
    pub var_re: Vec<f64>,
    pub var_im: Vec<f64>,
    pub cov_re_im: Vec<f64>,
    pub m: usize,
}

/// One probe of the ECF of observed columns `cols[k][path]`.
struct ProbeMoments {
    value: Complex64,
    var_re: f64,
    var_im: f64,
    cov: f64,
}

fn probe_moments(cols: &[Vec<f64>], z: &[f64]) -> ProbeMoments {
    let m = cols[0].len();
    let mf = m as f64;
    let mut cs = Vec::with_capacity(m);
    let (mut sc, mut ss) = (0.0, 0.0);
    for i in 0..m {
        let mut phase = 0.0;
        for (k, col) in cols.iter().enumerate() {
            phase += z[k] * col[i];
        }
        let (s, c) = phase.sin_cos();
        sc += c;
        ss += s;
        cs.push((c, s));
    }
    let (mc, ms) = (sc / mf, ss / mf);
    let (mut vcc, mut vss, mut vcs) = (0.0, 0.0, 0.0);
    for &(c, s) in &cs {
        vcc += (c - mc) * (c - mc);
        vss += (s - ms) * (s - ms);
        vcs += (c - mc) * (s - ms);
    }
    let d = (mf - 1.0).max(1.0) * mf;
    ProbeMoments { value: Complex64::new(mc, ms), var_re: vcc / d, var_im: vss / d, cov: vcs / d }
}

/// ECF of the joint sample `cols` (one column per time, one row per path).
pub fn ecf_from_columns(times: &[f64], cols: &[Vec<f64>], probes: &[Vec<f64>]) -> Result<EcfEstimate> {
    if cols.is_empty() || cols.len() != times.len() {
        return Err(invalid("ecf needs one data column per time"));
    }
    let m = cols[0].len();
    if m == 0 || cols.iter().any(|c| c.len() != m) {
        return Err(invalid("ecf columns must be nonempty and of equal length"));
    }
    if let Some(p) = probes.iter().find(|p| p.len() != times.len()) {
        return Err(invalid(format!("probe {p:?} has dimension {} but {} times are observed", p.len(), times.len())));
    }
    let mut est = EcfEstimate {
        times: times.to_vec(),
        probes: probes.to_vec(),
        values: Vec::with_capacity(probes.len()),
        std_err: Vec::with_capacity(probes.len()),
        var_re: Vec::with_capacity(probes.len()),
        var_im: Vec::with_capacity(probes.len()),
        cov_re_im: Vec::with_capacity(probes.len()),
        m,
    };
    for z in probes {
        let pm = if z.iter().all(|x| *x == 0.0) {
            ProbeMoments { value: Complex64::new(1.0, 0.0), var_re: 0.0, var_im: 0.0, cov: 0.0 }
        } else {
            probe_moments(cols, z)
        };
        est.values.push(pm.value);
        est.std_err.push((pm.var_re + pm.var_im).sqrt());
        est.var_re.push(pm.var_re);
        est.var_im.push(pm.var_im);
        est.cov_re_im.push(pm.cov);
    }
    Ok(est)
}

/// ECF of the ensemble's values at `times` (which must be grid points).
pub fn ecf_estimate(ensemble: &PathEnsemble, times: &[f64], probes: &[Vec<f64>]) -> Result<EcfEstimate> {
    let cols = times.iter().map(|&t| ensemble.values_at(t)).collect::<Result<Vec<_>>>()?;
    ecf_from_columns(times, &cols, probes)
}

/// Distinguished logarithm of an ECF with delta-method variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEcf {
    pub value: Complex64,
    pub var_re: f64,
    pub var_im: f64,
}

/// `log φ̂(z)` on the branch continuous along `λ ↦ φ̂(λz)`, `λ ∈ [0, 1]`.
///
/// Fails with `CfTooSmall` if `|φ̂|` drops below [`CF_FLOOR`] on the way.
pub fn distinguished_log(cols: &[Vec<f64>], z: &[f64]) -> Result<LogEcf> {
    let mut arg = 0.0;
    let mut prev = Complex64::new(1.0, 0.0);
    let mut last = None;
    for step in 1..=LOG_STEPS {
        let lambda = step as f64 / LOG_STEPS as f64;
        let zl: Vec<f64> = z.iter().map(|x| x * lambda).collect();
        let pm = probe_moments(cols, &zl);
        let mag = pm.value.norm();
        if mag < CF_FLOOR {
            return Err(IdtError::CfTooSmall { magnitude: mag, floor: CF_FLOOR, probe: zl });
        }
        let mut d = pm.value.arg() - prev.arg();
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        arg += d;
        prev = pm.value;
        last = Some(pm);
    }
    let pm = last.expect("at least one step");
    let (p, q) = (pm.value.re, pm.value.im);
    let r4 = pm.value.norm_sqr().powi(2);
    Ok(LogEcf {
        value: Complex64::new(pm.value.norm().ln(), arg),
        var_re: (p * p * pm.var_re + q * q * pm.var_im + 2.0 * p * q * pm.cov) / r4,
        var_im: (q * q * pm.var_re + p * p * pm.var_im - 2.0 * p * q * pm.cov) / r4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::stable_ray;
    use crate::process_models::{sample_levy, LevyTriplet, TimeGrid};

    #[test]
    fn zero_probe_and_conjugate_symmetry() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let e = sample_levy(&LevyTriplet::brownian(), &grid, 500, 1).unwrap();
        let probes = vec![vec![0.0, 0.0], vec![0.3, -1.1], vec![-0.3, 1.1]];
        let est = ecf_estimate(&e, &[1.0, 2.0], &probes).unwrap();
        assert_eq!(est.values[0], Complex64::new(1.0, 0.0));
        assert_eq!(est.std_err[0], 0.0);
        assert_eq!(est.values[2], est.values[1].conj());
        for (v, se) in est.values.iter().zip(&est.std_err) {
            assert!(v.norm() <= 1.0 + 3.0 * se);
        }
    }

    #[test]
    fn brownian_and_cauchy_values() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let b = sample_levy(&LevyTriplet::brownian(), &grid, 100_000, 2).unwrap();
        let est = ecf_estimate(&b, &[1.0], &[vec![1.0]]).unwrap();
        assert!((est.values[0] - Complex64::new((-0.5f64).exp(), 0.0)).norm() < 4.0 * est.std_err[0]);
        let c = stable_ray(1.0, false, &grid, 100_000, 3).unwrap();
        let est = ecf_estimate(&c, &[2.0], &[vec![1.0]]).unwrap();
        assert!((est.values[0] - Complex64::new((-2f64).exp(), 0.0)).norm() < 4.0 * est.std_err[0]);
    }

    #[test]
    fn off_grid_time_is_rejected() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let b = sample_levy(&LevyTriplet::brownian(), &grid, 10, 2).unwrap();
        assert!(matches!(ecf_estimate(&b, &[0.5], &[vec![1.0]]), Err(IdtError::GridMismatch(_))));
    }

    #[test]
    fn log_follows_rotation_past_pi() {
        // A pure drift X = 5: φ(z) = e^{5iz}, argument 5 at z = 1 (beyond π).
        let cols = vec![vec![5.0; 10]];
        let l = distinguished_log(&cols, &[1.0]).unwrap();
        assert!((l.value.im - 5.0).abs() < 1e-12);
        assert!(l.value.re.abs() < 1e-12);
    }

    #[test]
    fn small_cf_is_refused() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let b = sample_levy(&LevyTriplet::brownian(), &grid, 1000, 2).unwrap();
        let cols = vec![b.values_at(1.0).unwrap()];
        assert!(matches!(distinguished_log(&cols, &[4.0]), Err(IdtError::CfTooSmall { .. })));
    }
}
