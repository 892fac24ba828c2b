//! Cross-module pipelines: samplers feeding the analytic and statistical layers.

use idt_core::constructions::{gaussian_exact, gaussian_phi_path, ConstructionSpec, PathSampler, PhiKernel};
use idt_core::process_models::TimeGrid;
use idt_core::spectral::{covariance_phi, hirsch_min_eig, CovarianceFn};
use idt_core::verify::{increment_dependence_stat, tsd_factorization_test};

#[test]
fn point_transform_covariance_from_samples() {
    let y = ConstructionSpec::brownian_point_transform(vec![(1.0, 1.0), (2.0, 1.0)]);
    let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
    let e = y.sample(&grid, 40_000, 5u64.into()).unwrap();
    let c = CovarianceFn::empirical(&e);
    // Var Y_1 = 1 + 2 + 2, Var Y_2 = 2 + 4 + 4, Cov(Y_1, Y_2) = 1 + 2 + 2 + 1 = 6
    for (s, t, want) in [(1.0, 1.0, 5.0), (2.0, 2.0, 10.0), (1.0, 2.0, 6.0)] {
        let got = c.eval(s, t).unwrap();
        assert!((got - want).abs() < 0.05 * want, "({s},{t}): {got} vs {want}");
    }
    let d = increment_dependence_stat(&e, 1.0, 2.0).unwrap();
    assert!((d.value - 1.0).abs() < 4.0 * d.std_err, "{d:?}");
}

#[test]
fn kernel_samplers_agree_with_closed_covariance() {
    let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 2.0]).unwrap();
    for phi in [PhiKernel::beta_edge(0.25).unwrap(), PhiKernel::power_tail_upper(0.75).unwrap()] {
        let mesh = CovarianceFn::empirical(&gaussian_phi_path(&phi, &grid, 40_000, 9).unwrap());
        let exact = CovarianceFn::empirical(&gaussian_exact(&phi, &grid, 40_000, 10).unwrap());
        for (s, t) in [(0.5, 0.5), (0.5, 2.0), (1.0, 2.0), (2.0, 2.0)] {
            let want = covariance_phi(&phi, s, t).unwrap();
            for (name, c) in [("mesh", &mesh), ("exact", &exact)] {
                let got = c.eval(s, t).unwrap();
                assert!((got - want).abs() < 0.05 * want.abs().max(0.5), "{name} {phi:?} ({s},{t}): {got} vs {want}");
            }
        }
    }
}

#[test]
fn factorization_accepts_kernel_process() {
    let spec = ConstructionSpec::GaussianExact { phi: PhiKernel::power_tail_lower(0.25).unwrap() };
    let r = tsd_factorization_test(&spec, 0.5, &[1.0], &[], 10_000, 0.01, 3).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn empirical_brownian_covariance_is_positive_on_the_hirsch_form() {
    let grid = TimeGrid::uniform(1.0, 32).unwrap();
    let e = ConstructionSpec::brownian().sample(&grid, 20_000, 4u64.into()).unwrap();
    let s = hirsch_min_eig(&CovarianceFn::empirical(&e), 16).unwrap();
    assert!(s.is_nonnegative(1e-2), "{s:?}");
}
