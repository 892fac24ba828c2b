use num_complex::Complex64;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::ecf::{distinguished_log, ecf_from_columns, EcfEstimate};
use super::report::{Decision, TestReport};
use crate::constructions::PathSampler;
use crate::error::{invalid, IdtError, Result};
use crate::process_models::{LevyTriplet, PathEnsemble, TimeGrid};
use crate::rng::SeedInfo;

/// Smallest ensemble size accepted by the tests.
pub const MIN_SAMPLES: usize = 100;

/// `{±0.25, ±0.5, ±1}` along every axis, plus the diagonals `(v, …, v)` for
/// `v ∈ {±0.25, ±0.5}` when there is more than one time.
pub fn default_probes(dim: usize) -> Vec<Vec<f64>> {
    let values = [0.25, -0.25, 0.5, -0.5, 1.0, -1.0];
    let mut out = Vec::new();
    for axis in 0..dim {
        for v in values {
            let mut z = vec![0.0; dim];
            z[axis] = v;
            out.push(z);
        }
    }
    if dim > 1 {
        for v in [0.25, -0.25, 0.5, -0.5] {
            out.push(vec![v; dim]);
        }
    }
    out
}

fn check_common(m: usize, level: f64, times: &[f64]) -> Result<()> {
    if m < MIN_SAMPLES {
        return Err(IdtError::SampleTooSmall { m, min: MIN_SAMPLES });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {level}")));
    }
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(invalid("test times must be nonempty, finite and positive"));
    }
    Ok(())
}

fn resolve_probes(probes: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    if probes.is_empty() {
        default_probes(dim)
    } else {
        probes.to_vec()
    }
}

/// Running maximum of standardized discrepancies with a Bonferroni threshold.
struct MaxStat {
    stat: f64,
    components: usize,
}

impl MaxStat {
    fn new() -> Self {
        Self { stat: 0.0, components: 0 }
    }

    fn push(&mut self, diff: f64, var: f64) {
        if var > 0.0 {
            self.components += 1;
            self.stat = self.stat.max(diff.abs() / var.sqrt());
        } else if diff != 0.0 {
            self.components += 1;
            self.stat = f64::MAX;
        }
    }

    fn finish(self, test: String, level: f64, m: usize, seed: SeedInfo, times: &[f64], probes: Vec<Vec<f64>>) -> TestReport {
        let k = self.components.max(1) as f64;
        let normal = Normal::standard();
        let threshold = normal.inverse_cdf(1.0 - level / (2.0 * k));
        let p_value_proxy = (2.0 * k * normal.sf(self.stat)).min(1.0);
        TestReport {
            test,
            statistic: self.stat,
            threshold,
            decision: if self.stat > threshold { Decision::Reject } else { Decision::Pass },
            m,
            seed: seed.master_seed,
            times: times.to_vec(),
            probes,
            p_value_proxy,
        }
    }
}

fn columns(e: &PathEnsemble, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    times.iter().map(|&t| e.values_at(t)).collect()
}

fn scaled(times: &[f64], c: f64) -> Vec<f64> {
    times.iter().map(|t| c * t).collect()
}

/// Two-sample ECF test of `(X_{nt})_t =ᵈ (X¹_t + … + Xⁿ_t)_t` at the given times.
///
/// Ensemble `A` observes one copy at `n·times`; ensemble `B` sums `n`
/// independent copies observed at `times`. Each copy uses its own seed block.
#[allow(clippy::too_many_arguments)]
pub fn idt_property_test(
    sampler: &dyn PathSampler,
    n: u32,
    times: &[f64],
    probes: &[Vec<f64>],
    m: usize,
    level: f64,
    seed: impl Into<SeedInfo>,
) -> Result<TestReport> {
    let seed = seed.into();
    check_common(m, level, times)?;
    if n < 2 {
        return Err(invalid("the IDT test needs n >= 2"));
    }
    let probes = resolve_probes(probes, times.len());
    let nt = scaled(times, n as f64);
    let a = sampler.sample(&TimeGrid::through(&nt)?, m, seed.block(0))?;
    let cols_a = columns(&a, &nt)?;
    let grid_b = TimeGrid::through(times)?;
    let mut cols_b = vec![vec![0.0; m]; times.len()];
    for k in 1..=n {
        let b = sampler.sample(&grid_b, m, seed.block(k as u64))?;
        for (acc, col) in cols_b.iter_mut().zip(columns(&b, times)?) {
            acc.iter_mut().zip(col).for_each(|(x, y)| *x += y);
        }
    }
    let ea = ecf_from_columns(&nt, &cols_a, &probes)?;
    let eb = ecf_from_columns(times, &cols_b, &probes)?;
    let mut st = MaxStat::new();
    two_sample(&mut st, &ea, &eb);
    Ok(st.finish(format!("idt_property(n={n}, {})", sampler.label()), level, m, seed, times, probes))
}

fn two_sample(st: &mut MaxStat, a: &EcfEstimate, b: &EcfEstimate) {
    for k in 0..a.values.len() {
        st.push(a.values[k].re - b.values[k].re, a.var_re[k] + b.var_re[k]);
        st.push(a.values[k].im - b.values[k].im, a.var_im[k] + b.var_im[k]);
    }
}

fn one_sample(st: &mut MaxStat, est: &EcfEstimate, k: usize, target: Complex64) {
    st.push(est.values[k].re - target.re, est.var_re[k]);
    st.push(est.values[k].im - target.im, est.var_im[k]);
}

/// One-dimensional marginals of the sampler against `exp(t ψ(z))` of `triplet`.
#[allow(clippy::too_many_arguments)]
pub fn marginal_mimic_test(
    sampler: &dyn PathSampler,
    triplet: &LevyTriplet,
    times: &[f64],
    probes: &[f64],
    m: usize,
    level: f64,
    seed: impl Into<SeedInfo>,
) -> Result<TestReport> {
    let seed = seed.into();
    check_common(m, level, times)?;
    let zs: Vec<f64> = if probes.is_empty() { default_probes(1).into_iter().map(|p| p[0]).collect() } else { probes.to_vec() };
    let e = sampler.sample(&TimeGrid::through(times)?, m, seed.block(0))?;
    let single: Vec<Vec<f64>> = zs.iter().map(|&z| vec![z]).collect();
    let mut st = MaxStat::new();
    for &t in times {
        let est = ecf_from_columns(&[t], &[e.values_at(t)?], &single)?;
        for (k, &z) in zs.iter().enumerate() {
            one_sample(&mut st, &est, k, (triplet.char_exponent(z)? * t).exp());
        }
    }
    Ok(st.finish(format!("marginal_mimic({})", sampler.label()), level, m, seed, times, single))
}

/// `E exp(i Σ z_j L_{t_j})` for the Lévy process `L` of `triplet`.
fn levy_joint_cf(triplet: &LevyTriplet, times: &[f64], z: &[f64]) -> Result<Complex64> {
    let mut pairs: Vec<(f64, f64)> = times.iter().copied().zip(z.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut exponent = Complex64::new(0.0, 0.0);
    let mut prev = 0.0;
    for k in 0..pairs.len() {
        let load: f64 = pairs[k..].iter().map(|p| p.1).sum();
        exponent += triplet.char_exponent(load)? * (pairs[k].0 - prev);
        prev = pairs[k].0;
    }
    Ok(exponent.exp())
}

/// Joint finite-dimensional law of the sampler against the Lévy process of
/// `triplet`; rejects when the process only mimics the marginals.
#[allow(clippy::too_many_arguments)]
pub fn joint_mimic_test(
    sampler: &dyn PathSampler,
    triplet: &LevyTriplet,
    times: &[f64],
    probes: &[Vec<f64>],
    m: usize,
    level: f64,
    seed: impl Into<SeedInfo>,
) -> Result<TestReport> {
    let seed = seed.into();
    check_common(m, level, times)?;
    let probes = resolve_probes(probes, times.len());
    let e = sampler.sample(&TimeGrid::through(times)?, m, seed.block(0))?;
    let est = ecf_from_columns(times, &columns(&e, times)?, &probes)?;
    let mut st = MaxStat::new();
    for (k, z) in probes.iter().enumerate() {
        one_sample(&mut st, &est, k, levy_joint_cf(triplet, times, z)?);
    }
    Ok(st.finish(format!("joint_mimic({})", sampler.label()), level, m, seed, times, probes))
}

/// Factorization `φ_t(z) = φ_{ct}(z) φ_{(1-c)t}(z)` compared on distinguished
/// logarithms, with three independent ensembles at `t`, `ct` and `(1-c)t`.
#[allow(clippy::too_many_arguments)]
pub fn tsd_factorization_test(
    sampler: &dyn PathSampler,
    c: f64,
    times: &[f64],
    probes: &[Vec<f64>],
    m: usize,
    level: f64,
    seed: impl Into<SeedInfo>,
) -> Result<TestReport> {
    let seed = seed.into();
    check_common(m, level, times)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("factorization needs c in (0, 1), got {c}")));
    }
    let probes = resolve_probes(probes, times.len());
    let mut logs = Vec::with_capacity(3);
    for (k, factor) in [1.0, c, 1.0 - c].into_iter().enumerate() {
        let ts = scaled(times, factor);
        let e = sampler.sample(&TimeGrid::through(&ts)?, m, seed.block(k as u64))?;
        let cols = columns(&e, &ts)?;
        logs.push(probes.iter().map(|z| distinguished_log(&cols, z)).collect::<Result<Vec<_>>>()?);
    }
    let mut st = MaxStat::new();
    for k in 0..probes.len() {
        let (a, b, d) = (&logs[0][k], &logs[1][k], &logs[2][k]);
        let diff = a.value - b.value - d.value;
        st.push(diff.re, a.var_re + b.var_re + d.var_re);
        st.push(diff.im, a.var_im + b.var_im + d.var_im);
    }
    Ok(st.finish(format!("tsd_factorization(c={c}, {})", sampler.label()), level, m, seed, times, probes))
}

/// `|e^{tψ(z)} - e^{ctψ(z)} e^{(1-c)tψ(z)}|` for a Lévy triplet.
pub fn analytic_factorization_residual(triplet: &LevyTriplet, c: f64, t: f64, z: f64) -> Result<f64> {
    let psi = triplet.char_exponent(z)?;
    Ok(((psi * t).exp() - (psi * (c * t)).exp() * (psi * ((1.0 - c) * t)).exp()).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceStat {
    /// Sample `Cov(X_{t1}, X_{t2} - X_{t1})`.
    pub value: f64,
    pub std_err: f64,
}

pub fn increment_dependence_stat(ensemble: &PathEnsemble, t1: f64, t2: f64) -> Result<DependenceStat> {
    if !(t1 < t2) {
        return Err(invalid(format!("increment dependence needs t1 < t2, got {t1} and {t2}")));
    }
    let x = ensemble.values_at(t1)?;
    let y: Vec<f64> = ensemble.values_at(t2)?.iter().zip(&x).map(|(b, a)| b - a).collect();
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(IdtError::SampleTooSmall { m: x.len(), min: 2 });
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let value = prods.iter().sum::<f64>() / (n - 1.0);
    let var = prods.iter().map(|p| (p - value).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(DependenceStat { value, std_err: (var / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{stable_ray, ConstructionSpec};
    use crate::process_models::sample_levy;

    fn y_spec() -> ConstructionSpec {
        ConstructionSpec::brownian_point_transform(vec![(1.0, 1.0), (2.0, 1.0)])
    }

    #[test]
    fn idt_test_examples() {
        let b = idt_property_test(&ConstructionSpec::brownian(), 2, &[0.5, 1.0], &[], 10_000, 0.01, 11).unwrap();
        assert!(b.passed(), "{b:?}");
        let y = idt_property_test(&y_spec(), 2, &[1.0, 2.0], &[], 10_000, 0.01, 12).unwrap();
        assert!(y.passed(), "{y:?}");
        let q = idt_property_test(&ConstructionSpec::Besq1 {}, 2, &[1.0], &[], 10_000, 0.01, 13).unwrap();
        assert_eq!(q.decision, Decision::Reject, "{q:?}");
        assert!(q.statistic > 2.0 * q.threshold);
    }

    #[test]
    fn report_json_fields() {
        let r = idt_property_test(&ConstructionSpec::brownian(), 2, &[1.0], &[vec![0.5]], 200, 0.01, 1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["decision", "m", "probes", "seed", "statistic", "test", "threshold", "times"]);
        assert!(v["decision"] == "pass" || v["decision"] == "reject");
    }

    #[test]
    fn small_samples_are_refused() {
        let r = idt_property_test(&ConstructionSpec::brownian(), 2, &[1.0], &[], 50, 0.01, 1);
        assert!(matches!(r, Err(IdtError::SampleTooSmall { m: 50, min: 100 })));
    }

    #[test]
    fn mimicking_is_one_dimensional() {
        let ray = ConstructionSpec::StableRay { alpha: 1.0, one_sided: false };
        let cauchy = LevyTriplet::cauchy(1.0).unwrap();
        let marg = marginal_mimic_test(&ray, &cauchy, &[1.0, 3.0], &[], 10_000, 0.01, 21).unwrap();
        assert!(marg.passed(), "{marg:?}");
        let joint = joint_mimic_test(&ray, &cauchy, &[1.0, 2.0], &[vec![1.0, -0.5], vec![0.5, -0.25]], 10_000, 0.01, 22).unwrap();
        assert_eq!(joint.decision, Decision::Reject, "{joint:?}");
        let own = marginal_mimic_test(&ConstructionSpec::brownian(), &LevyTriplet::brownian(), &[1.0, 2.0], &[], 10_000, 0.01, 23).unwrap();
        assert!(own.passed());
    }

    #[test]
    fn joint_cf_of_levy_process() {
        let cauchy = LevyTriplet::cauchy(1.0).unwrap();
        // (1, 1) at times (1, 2): ψ(2)·1 + ψ(1)·1 = -3, the same as for the ray.
        let v = levy_joint_cf(&cauchy, &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((v.re - (-3f64).exp()).abs() < 1e-15);
        let v = levy_joint_cf(&cauchy, &[2.0, 1.0], &[-0.5, 1.0]).unwrap();
        assert!((v.re - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn factorization_examples() {
        let r = analytic_factorization_residual(&LevyTriplet::brownian(), 0.5, 1.0, 1.0).unwrap();
        assert!(r < 1e-15);
        for c in [1.0 / 3.0, 0.5] {
            let b = tsd_factorization_test(&ConstructionSpec::brownian(), c, &[1.0], &[], 10_000, 0.01, 31).unwrap();
            assert!(b.passed(), "{b:?}");
            let y = tsd_factorization_test(&y_spec(), c, &[1.0], &[vec![0.25], vec![-0.5]], 10_000, 0.01, 32).unwrap();
            assert!(y.passed(), "{y:?}");
        }
        let q = tsd_factorization_test(&ConstructionSpec::Besq1 {}, 0.5, &[1.0], &[], 10_000, 0.01, 33).unwrap();
        assert_eq!(q.decision, Decision::Reject, "{q:?}");
    }

    #[test]
    fn factorization_refuses_vanishing_cf() {
        let r = tsd_factorization_test(&ConstructionSpec::brownian(), 0.5, &[1.0], &[vec![5.0]], 1000, 0.01, 1);
        assert!(matches!(r, Err(IdtError::CfTooSmall { .. })));
    }

    #[test]
    fn dependence_examples() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let b = sample_levy(&LevyTriplet::brownian(), &grid, 100_000, 41).unwrap();
        let d = increment_dependence_stat(&b, 1.0, 2.0).unwrap();
        assert!(d.value.abs() < 4.0 * d.std_err, "{d:?}");
        let y = y_spec().sample(&grid, 100_000, SeedInfo::new(42)).unwrap();
        let d = increment_dependence_stat(&y, 1.0, 2.0).unwrap();
        assert!((d.value - 1.0).abs() < 4.0 * d.std_err, "{d:?}");
        let ray = stable_ray(2.0, false, &grid, 100_000, 43).unwrap();
        let d = increment_dependence_stat(&ray, 1.0, 2.0).unwrap();
        assert!(d.value > 4.0 * d.std_err);
        assert!((d.value - 2.0 * (2f64.sqrt() - 1.0)).abs() < 4.0 * d.std_err);
    }
}
