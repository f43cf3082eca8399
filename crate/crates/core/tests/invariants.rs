mod common;

use common::*;
use proptest::prelude::*;

fn fixture(i: usize) -> &'static Fixture {
    &fixtures()[i % fixtures().len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matrices_are_symmetric_and_definite(i in 0usize..4, seed in any::<u64>()) {
        prop_assert_eq!(symmetric_definite(fixture(i), seed), Ok(()));
    }

    #[test]
    fn robin_operator_is_bulk_plus_boundary_terms(i in 0usize..4, alpha in 0.01f64..100.0, mu in 0.0f64..10.0, seed in any::<u64>()) {
        prop_assert_eq!(trace_compatibility(fixture(i), alpha, mu, seed), Ok(()));
    }

    #[test]
    fn harmonic_extension_minimizes_energy(i in 0usize..4, seed in any::<u64>(), amp in 1e-6f64..1.0) {
        prop_assert_eq!(harmonic_minimality(fixture(i), seed, amp), Ok(()));
    }

    #[test]
    fn norms_satisfy_axioms(i in 0usize..4, seed in any::<u64>(), c in -50.0f64..50.0) {
        prop_assume!(c.abs() > 1e-3);
        prop_assert_eq!(norm_axioms(fixture(i), seed, c), Ok(()));
    }

    #[test]
    fn stability_ratios_are_scale_invariant(i in 0usize..4, seed in any::<u64>(), c in -1e3f64..1e3) {
        prop_assume!(c.abs() > 1e-3);
        let (dirichlet, robin) = &ratio_operators()[i];
        prop_assert_eq!(ratio_scale_invariance(fixture(i), dirichlet, seed, c), Ok(()));
        prop_assert_eq!(ratio_scale_invariance(fixture(i), robin, seed, c), Ok(()));
    }

    #[test]
    fn matrices_are_translation_invariant(i in 0usize..4, dx in -5.0f64..5.0, dy in -5.0f64..5.0, dz in -5.0f64..5.0) {
        prop_assert_eq!(translation_invariance(fixture(i), [dx, dy, dz]), Ok(()));
    }
}

#[test]
fn stiffness_annihilates_constants() {
    for f in fixtures() {
        assert_eq!(constant_kernel(f), Ok(()));
    }
}

#[test]
fn mass_matrices_reproduce_mesh_measures() {
    for f in fixtures() {
        assert_eq!(measure_consistency(f), Ok(()));
    }
}

#[test]
fn curved_measures_converge_at_order_2k() {
    let e = disk_measure_errors(1.3);
    for w in e.windows(2) {
        let rate_vol = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        let rate_area = (w[0].2 / w[1].2).ln() / (w[0].0 / w[1].0).ln();
        assert!(rate_vol > 3.5 && rate_area > 3.5, "{e:?}: rates {rate_vol} {rate_area}");
    }
}
