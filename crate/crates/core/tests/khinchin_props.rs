use std::f64::consts::PI;

use infdiv::canonical_forms::catalog::{cauchy, gaussian, poisson};
use infdiv::canonical_forms::LevyKhintchinePair;
use infdiv::divisibility::CharacteristicFunctionGrid;
use infdiv::khinchin::{
    definetti_sequence, definetti_sequence_against, delta, delta_grid, extract_limit, g_from_k_windowed,
    gnedenko_tail_check, invert, k_from_delta, normal_root, poisson_root, GhFamily, InversionConfig,
    RecoveryOptions, Window,
};
use infdiv::CanonicalMeasure;
use num_complex::Complex64;
use proptest::prelude::*;

/// Gaussian part plus one Poisson jump.
fn mixed_law(gamma: f64, sigma2: f64, rate: f64, jump: f64) -> LevyKhintchinePair {
    let p = poisson(rate, jump).unwrap();
    let mut atoms = vec![(jump, p.g.atom_mass_at(jump))];
    if sigma2 > 0.0 {
        atoms.push((0.0, sigma2));
    }
    LevyKhintchinePair::new(gamma + p.gamma, CanonicalMeasure::from_atoms(&atoms).unwrap()).unwrap()
}

fn jump() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.6f64, 0.6..3.0f64]
}

fn inversion_grid(law: &LevyKhintchinePair) -> CharacteristicFunctionGrid {
    CharacteristicFunctionGrid::from_log(|t| law.log_cf(t), 41.0, 8201).unwrap()
}

fn symmetric(n: i32, step: f64) -> Vec<f64> {
    (-n..=n).map(|i| i as f64 * step).collect()
}

/// Sine integral by its power series; adequate for |x| <= 4.
fn si(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for k in 1..40 {
        let k = k as f64;
        term *= -x * x / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term / (2.0 * k + 1.0);
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta_is_conjugate_symmetric(
        gamma in -2.0..2.0f64, sigma2 in 0.0..2.0f64, rate in 0.1..3.0f64, j in jump(), t in 0.0..4.0f64,
    ) {
        let law = mixed_law(gamma, sigma2, rate, j);
        let cf = CharacteristicFunctionGrid::from_log(|t| law.log_cf(t), 5.0, 1001).unwrap();
        let (a, b) = (delta(&cf, t).unwrap(), delta(&cf, -t).unwrap());
        prop_assert!((b - a.conj()).norm() <= 1e-9);
    }

    #[test]
    fn forward_backward_consistency(
        gamma in -1.0..1.0f64, sigma2 in prop_oneof![Just(0.0), 0.2..1.5f64], rate in 0.3..2.0f64, j in jump(),
    ) {
        let law = mixed_law(gamma, sigma2, rate, j);
        let cf = inversion_grid(&law);
        let u = symmetric(500, 0.01);
        let k = k_from_delta(&delta_grid(&cf).unwrap(), &u, &Window::default()).unwrap();
        let rec = g_from_k_windowed(&u, &k, &Window::default(), cf.step(), &RecoveryOptions::default()).unwrap();
        prop_assert!((rec.g.atom_mass_at(0.0) - sigma2).abs() <= 2e-3);
        for x in symmetric(45, 0.1) {
            if (x - j).abs() < 0.1 || x.abs() < 0.1 {
                continue;
            }
            prop_assert!((rec.g.cdf(x) - law.g.cdf(x)).abs() <= 2e-3, "u = {}: {} vs {}", x, rec.g.cdf(x), law.g.cdf(x));
        }
    }

    #[test]
    fn poisson_families_reconstruct(rate in 0.5..2.0f64, j in prop_oneof![-2.5..-0.5f64, 0.5..2.5f64]) {
        let exact = |t: f64| rate * (Complex64::cis(t * j) - 1.0);
        let cf = CharacteristicFunctionGrid::from_log(exact, 6.0, 1201).unwrap();
        let roots: Vec<_> = [1e-2, 1e-3, 1e-4].iter().map(|&h| (h, poisson_root(rate * h, j).unwrap())).collect();
        let family = GhFamily::from_roots(cf, &roots).unwrap();
        let limit = extract_limit(&family, &symmetric(30, 0.1)).unwrap();
        let law = LevyKhintchinePair::new(limit.drift, limit.g).unwrap();
        for t in symmetric(100, 0.05) {
            prop_assert!((law.log_cf(t) - exact(t)).norm() <= 1e-3);
        }
        let tails: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&a| gnedenko_tail_check(&family, a).unwrap()).collect();
        prop_assert!(tails[0] >= tails[1] && tails[1] >= tails[2]);
    }
}

#[test]
fn gaussian_family_reconstructs() {
    let cf = CharacteristicFunctionGrid::from_log(|t| Complex64::new(-0.5 * t * t, 0.0), 6.0, 1201).unwrap();
    let roots: Vec<_> = [1e-4, 1e-5, 1e-6].iter().map(|&h| (h, normal_root(h, 4001).unwrap())).collect();
    let family = GhFamily::from_roots(cf, &roots).unwrap();
    let limit = extract_limit(&family, &symmetric(30, 0.1)).unwrap();
    let law = LevyKhintchinePair::new(limit.drift, limit.g).unwrap();
    for t in symmetric(100, 0.05) {
        assert!((law.log_cf(t) - Complex64::new(-0.5 * t * t, 0.0)).norm() <= 1e-3);
    }
    let tails: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&a| gnedenko_tail_check(&family, a).unwrap()).collect();
    assert!(tails[0] >= tails[1] && tails[1] >= tails[2]);
}

#[test]
fn cauchy_truncation_errors_match_closed_form() {
    let law = cauchy(1.0).unwrap();
    let t: Vec<f64> = symmetric(100, 0.05);
    let eps = [0.5, 0.1, 0.02];
    let steps = definetti_sequence_against(&law, &eps, &t, |t| Complex64::from((-t.abs()).exp())).unwrap();
    for (step, &e) in steps.iter().zip(&eps) {
        // dropping |u| <= e adds (2/π)((cos te - 1)/e + t Si(te)) to -|t|
        let oracle = t
            .iter()
            .map(|&t| {
                let a = t.abs();
                let shift = 2.0 / PI * (((a * e).cos() - 1.0) / e + a * si(a * e));
                ((-a + shift).exp() - (-a).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!((step.error - oracle).abs() <= 1e-6, "eps {e}: {} vs {oracle}", step.error);
    }
    assert!(steps.windows(2).all(|w| w[1].error < w[0].error));
    // regression fixtures
    for (step, fixture) in steps.iter().zip([0.188784, 0.0184390, 0.00349048]) {
        assert!((step.error - fixture).abs() <= 1e-5, "{} vs {fixture}", step.error);
    }
}

#[test]
fn exact_truncations_for_atomic_laws() {
    let t = symmetric(50, 0.1);
    for law in [poisson(1.0, 1.0).unwrap(), gaussian(0.5, 2.0).unwrap(), poisson(2.0, -0.7).unwrap()] {
        for step in definetti_sequence(&law, &[0.5, 0.1, 0.02], &t).unwrap() {
            assert!(step.error <= 1e-12);
        }
    }
}

#[test]
fn inversion_tolerates_small_noise() {
    let law = poisson(1.0, 1.0).unwrap();
    let clean = inversion_grid(&law);
    // deterministic pseudo-noise of size 1e-6 on log phi
    let noisy = CharacteristicFunctionGrid::from_log(
        |t| law.log_cf(t) + if t == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(1e-6 * (7.3 * t).sin(), 1e-6 * (3.1 * t).cos()) },
        clean.t_max(),
        clean.len(),
    )
    .unwrap();
    let r = invert(&noisy, &InversionConfig::default()).unwrap();
    assert_eq!(r.jumps.len(), 1);
    assert!((r.jumps[0].location - 1.0).abs() < 0.01);
    assert!((r.jumps[0].mass - 0.5).abs() < 2e-3);
}
