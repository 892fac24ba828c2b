//! Property tests over randomly drawn parameters.

use idt_core::constructions::{ConstructionSpec, PathSampler, PhiKernel, RadialMeasure};
use idt_core::measures::{
    exp_mixture_closed_form, exp_mixture_density, idt_scaling_check, lift_path_measure, transform_levy_measure,
    uniform_u_edges, DiscretePathMeasure, LevyDensity, LevyTestFn, PathAtom, PathFunctional, ScalarLevyMeasure,
    TransformQuad,
};
use idt_core::parallel::with_workers;
use idt_core::process_models::TimeGrid;
use idt_core::spectral::{covariance_phi, lamperti_covariance, CovarianceFn};
use idt_core::verify::{ecf_estimate, idt_property_test, Decision};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = PhiKernel> {
    prop_oneof![
        (0.55f64..3.0).prop_map(|a| PhiKernel::power_tail_upper(a).unwrap()),
        (-2.0f64..0.45).prop_map(|a| PhiKernel::power_tail_lower(a).unwrap()),
        (-1.0f64..0.45).prop_map(|a| PhiKernel::beta_edge(a).unwrap()),
    ]
}

fn sampler() -> impl Strategy<Value = ConstructionSpec> {
    prop_oneof![
        Just(ConstructionSpec::brownian()),
        Just(ConstructionSpec::Besq1 {}),
        (0.3f64..2.0).prop_map(|alpha| ConstructionSpec::StableRay { alpha, one_sided: false }),
        Just(ConstructionSpec::brownian_point_transform(vec![(1.0, 1.0), (2.0, 0.5)])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covariance_is_symmetric_and_one_homogeneous(phi in kernel(), s in 0.05f64..20.0, t in 0.05f64..20.0, lam in 0.1f64..10.0) {
        let c = covariance_phi(&phi, s, t).unwrap();
        prop_assert_eq!(c, covariance_phi(&phi, t, s).unwrap());
        let scaled = covariance_phi(&phi, lam * s, lam * t).unwrap();
        prop_assert!((scaled - lam * c).abs() <= 1e-8 * (1.0 + lam * c.abs()), "{} vs {}", scaled, lam * c);
        prop_assert!(covariance_phi(&phi, s, s).unwrap() >= 0.0);
    }

    #[test]
    fn lamperti_transform_is_stationary(phi in kernel(), y in -3.0f64..3.0, z in -3.0f64..3.0, h in -3.0f64..3.0) {
        let c = CovarianceFn::FromPhi(phi);
        let a = lamperti_covariance(&c, y + h, z + h).unwrap();
        let b = lamperti_covariance(&c, y, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
    }

    #[test]
    fn ecf_has_unit_origin_and_conjugate_symmetry(spec in sampler(), seed in any::<u64>(), z in -2.0f64..2.0) {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let e = spec.sample(&grid, 300, seed.into()).unwrap();
        let est = ecf_estimate(&e, &[1.0], &[vec![0.0], vec![z], vec![-z]]).unwrap();
        prop_assert_eq!(est.values[0].re, 1.0);
        prop_assert_eq!(est.values[0].im, 0.0);
        prop_assert_eq!(est.std_err[0], 0.0);
        prop_assert_eq!(est.values[2], est.values[1].conj());
        prop_assert!(est.values[1].norm() <= 1.0 + 3.0 * est.std_err[1]);
    }

    #[test]
    fn ensembles_do_not_depend_on_worker_count(spec in sampler(), seed in any::<u64>()) {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 2.0]).unwrap();
        let a = with_workers(Some(1), || spec.sample(&grid, 64, seed.into()).unwrap());
        let b = with_workers(Some(3), || spec.sample(&grid, 64, seed.into()).unwrap());
        for (p, q) in a.paths.iter().zip(&b.paths) {
            prop_assert_eq!(&p.values, &q.values);
            prop_assert_eq!(p.values[0], 0.0);
        }
    }

    #[test]
    fn decision_follows_statistic(seed in any::<u64>(), level in 0.001f64..0.2) {
        let r = idt_property_test(&ConstructionSpec::brownian(), 2, &[1.0], &[], 200, level, seed).unwrap();
        prop_assert_eq!(r.decision == Decision::Reject, r.statistic > r.threshold);
        let again = idt_property_test(&ConstructionSpec::brownian(), 2, &[1.0], &[], 200, level, seed).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn transform_is_linear_in_nu_and_f(
        atoms in prop::collection::vec((0.1f64..3.0, 0.1f64..2.0), 2..5),
        split in 1usize..4,
        a in 0.2f64..3.0,
        k in 0.1f64..2.0,
    ) {
        let split = split.min(atoms.len() - 1);
        let whole = ScalarLevyMeasure::PointMasses { atoms: atoms.clone() };
        let left = ScalarLevyMeasure::PointMasses { atoms: atoms[..split].to_vec() };
        let right = ScalarLevyMeasure::PointMasses { atoms: atoms[split..].to_vec() };
        let mu = RadialMeasure::LogUniform { a: 0.5, b: 1.0 + a };
        let q = TransformQuad::default();
        let f = LevyTestFn::new(|y: f64| y * y / (1.0 + y * y)).unwrap();
        let g = LevyTestFn::new(move |y: f64| 1.0 - (-k * y).exp()).unwrap();
        let fg = LevyTestFn::new(move |y: f64| y * y / (1.0 + y * y) + 2.0 * (1.0 - (-k * y).exp())).unwrap();
        let t = |nu: &ScalarLevyMeasure, f: &LevyTestFn| transform_levy_measure(nu, &mu, f, &q).unwrap();
        let w = t(&whole, &f);
        prop_assert!((w - t(&left, &f) - t(&right, &f)).abs() <= 1e-9 * (1.0 + w.abs()));
        let sum = t(&whole, &f) + 2.0 * t(&whole, &g);
        prop_assert!((t(&whole, &fg) - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
    }

    #[test]
    fn power_density_mixture_matches_gamma_closed_form(c in 0.1f64..3.0, p in -0.9f64..-0.1, v in 0.1f64..10.0) {
        let nu = ScalarLevyMeasure::Density {
            density: LevyDensity::Power { coefficient: c, exponent: p },
            support: (0.0, f64::INFINITY),
            formal: true,
        };
        let q = exp_mixture_density(&nu, v).unwrap();
        let exact = exp_mixture_closed_form(&nu, v).unwrap();
        prop_assert!((q - exact).abs() <= 1e-6 * exact, "{} vs {}", q, exact);
    }

    #[test]
    fn lifted_jump_measures_scale(jump in 0.2f64..2.0, probe in 0.3f64..1.0, cells in 20usize..80) {
        let n = DiscretePathMeasure::new(vec![PathAtom::new(1.0, vec![0.0, jump, 1e5], vec![0.0, 1.0, 1.0]).unwrap()]).unwrap();
        let u_max = 3.0 * probe / jump + 1.0;
        let m = lift_path_measure(&n, &uniform_u_edges(u_max, cells).unwrap(), 3.0).unwrap();
        let width = m.u_resolution.unwrap();
        let f = PathFunctional::Indicator { time: probe, threshold: 0.0 };
        for k in [2, 3] {
            let r = idt_scaling_check(&m, k, std::slice::from_ref(&f), 2.0 * width).unwrap();
            let abs = (r.residuals[0].lhs - r.residuals[0].rhs).abs();
            // one u-cell straddles each jump, so the defect is at most n + 1 widths in absolute terms
            prop_assert!(abs <= (k as f64 + 1.0) * width + 1e-12, "{} > {}", abs, width);
        }
    }
}
