//! Randomized properties of the kernels, transforms and record sets.

use mrca_core::csbp;
use mrca_core::duality::{run_until_window_closed, ClosureOptions};
use mrca_core::kernels;
use mrca_core::simulate::RngStream;
use mrca_core::LifetimeMeasure;
use proptest::prelude::*;

fn measures() -> Vec<LifetimeMeasure> {
    vec![
        LifetimeMeasure::stable(0.5).unwrap(),
        LifetimeMeasure::stable(1.0).unwrap(),
        LifetimeMeasure::hyperbolic(0.5).unwrap(),
        LifetimeMeasure::hyperbolic(2.0).unwrap(),
        LifetimeMeasure::pareto(1.0, 2.0).unwrap(),
        LifetimeMeasure::pareto(2.0, 0.5).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_conserve_mass(k in 0usize..6, x in 0.0f64..4.0, t in 0.05f64..6.0) {
        let m = &measures()[k];
        let total = kernels::mass_balance(m, x, t).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-8, "{m:?} x={x} t={t}: {total}");
    }

    #[test]
    fn inverse_tail_round_trips(k in 0usize..6, e in -8.0f64..4.0) {
        let m = &measures()[k];
        let x = e.exp();
        let back = m.inverse_tail(m.tail(x).unwrap()).unwrap();
        prop_assert!((back / x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tv_bound_is_a_nonincreasing_probability(x in 0.0f64..5.0, t in 0.01f64..20.0, dt in 0.0f64..5.0) {
        let m = LifetimeMeasure::pareto(1.0, 2.0).unwrap();
        let a = kernels::tv_bound(&m, x, t).unwrap();
        let b = kernels::tv_bound(&m, x, t + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && b <= a + 1e-15);
    }

    #[test]
    fn delta_family_identities(
        beta in 0.05f64..=1.0,
        s in 0.0f64..10.0,
        t in 0.0f64..10.0,
        theta in 0.0f64..100.0,
        x in 0.0f64..5.0,
        d in 0.0f64..6.0,
    ) {
        prop_assert!(csbp::semigroup_residual(beta, d, s, t, theta, x) < 1e-12);
        prop_assert!(csbp::additivity_residual(beta, t, theta, [(x, d), (1.0, 0.5)]) < 1e-14);
        let v = csbp::laplace_delta_family(beta, x, t, theta, d);
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn dual_agrees_with_sweep(seed in 0u64..1000, u in 0.0f64..1.0) {
        let m = LifetimeMeasure::hyperbolic(2.0).unwrap();
        let (_, rec) = run_until_window_closed(&m, 30.0, ClosureOptions::default(), &mut RngStream::new(seed, 0).rng()).unwrap();
        let t = 30.0 * u;
        prop_assert_eq!(rec.dual_at(t).unwrap(), rec.dual_at_sweep(t).unwrap());
    }
}
