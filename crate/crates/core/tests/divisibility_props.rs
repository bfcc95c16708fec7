use std::f64::consts::PI;

use infdiv::canonical_forms::catalog::Catalog;
use infdiv::canonical_forms::CompoundPoissonSpec;
use infdiv::divisibility::{
    default_probe_sets, max_phase_increment, nth_root, psd_check, triangular_row, verify_grid,
    CharacteristicFunctionGrid,
};
use infdiv::CanonicalMeasure;
use num_complex::Complex64;
use proptest::prelude::*;

const T_MAX: f64 = 10.0;
const POINTS: usize = 401;

fn catalog() -> impl Strategy<Value = Catalog> {
    let jump = prop_oneof![-4.0..-0.1f64, 0.1..4.0f64];
    prop_oneof![
        (-3.0..3.0f64, 0.0..2.0f64).prop_map(|(gamma, sigma2)| Catalog::Gaussian { gamma, sigma2 }),
        (0.05..4.0f64, jump).prop_map(|(rate, jump)| Catalog::Poisson { rate, jump }),
        (0.05..3.0f64, prop::collection::vec((0.1..3.0f64, any::<bool>(), 0.1..1.0f64), 1..4)).prop_map(
            |(rate, raw)| {
                let total: f64 = raw.iter().map(|r| r.2).sum();
                let atoms: Vec<(f64, f64)> =
                    raw.iter().map(|&(u, neg, p)| (if neg { -u } else { u }, p / total)).collect();
                let jump = CanonicalMeasure::from_atoms(&atoms).unwrap();
                Catalog::CompoundPoisson(CompoundPoissonSpec::new(rate, jump).unwrap())
            }
        ),
    ]
}

fn grid_of(entry: &Catalog) -> CharacteristicFunctionGrid {
    CharacteristicFunctionGrid::build(|t| entry.exact_log_cf(t).exp(), T_MAX, POINTS).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_reproduce_the_parent(entry in catalog()) {
        let cf = grid_of(&entry);
        for n in 1..=20u32 {
            let row = triangular_row(&cf, n).unwrap();
            prop_assert!(row.reproduction_error(&cf) <= 1e-9, "n = {}", n);
        }
    }

    #[test]
    fn roots_compose(entry in catalog(), a in 1u32..6, b in 1u32..6) {
        let cf = grid_of(&entry);
        let twice = nth_root(&nth_root(&cf, a).unwrap(), b).unwrap();
        let once = nth_root(&cf, a * b).unwrap();
        for (x, y) in twice.values().iter().zip(once.values()) {
            prop_assert!((x - y).norm() <= 1e-9);
        }
    }

    #[test]
    fn genuine_characteristic_functions_are_positive_definite(
        entry in catalog(),
        idx in prop::collection::btree_set(-100i32..=100, 1..=8),
    ) {
        let cf = grid_of(&entry);
        let probes: Vec<f64> = idx.iter().map(|&k| k as f64 * cf.step()).collect();
        let r = psd_check(&cf, &probes, 1e-8).unwrap();
        prop_assert!(r.is_psd, "min eigenvalue {}", r.min_eigenvalue);
    }

    #[test]
    fn unwrapped_phase_is_continuous(entry in catalog()) {
        let cf = grid_of(&entry);
        prop_assert!(max_phase_increment(&cf) < PI);
        for (l, v) in cf.log_values().iter().zip(cf.values()) {
            prop_assert!((l.exp() - v).norm() <= 1e-12);
        }
    }

    #[test]
    fn catalog_laws_pass_the_default_checks(entry in catalog()) {
        // the widest default probe set spans 12
        let cf = CharacteristicFunctionGrid::build(|t| entry.exact_log_cf(t).exp(), 12.0, 481).unwrap();
        let report = verify_grid(&cf, &[1, 2, 3, 5], &default_probe_sets(), 1e-8).unwrap();
        prop_assert!(report.pass, "{:?}", report.witness);
        prop_assert!(report.skipped.is_empty());
    }
}

#[test]
fn large_drift_winds_without_breaking_the_branch() {
    let cf = CharacteristicFunctionGrid::build(|t| Complex64::cis(50.0 * t), 10.0, 2001).unwrap();
    assert!(max_phase_increment(&cf) < PI);
    let last = *cf.log_values().last().unwrap();
    assert!((last.im - 500.0).abs() < 1e-9);
    let root = nth_root(&cf, 7).unwrap();
    assert!((root.log_values().last().unwrap().im - 500.0 / 7.0).abs() < 1e-9);
}
