//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use infdiv::canonical_forms::catalog::{cauchy, gaussian, poisson};
use infdiv::canonical_forms::{
    cf_compound_poisson, kolmogorov_to_lk, levy_to_lk, lk_to_kolmogorov, lk_to_levy, CompoundPoissonSpec,
    LevyKhintchinePair,
};
use infdiv::divisibility::{default_probe_sets, nth_root, verify_infinitely_divisible, CharacteristicFunctionGrid, Witness};
use infdiv::khinchin::{
    definetti_sequence_against, delta, delta_grid, extract_limit, g_from_k, gnedenko_tail_check, k_from_delta,
    poisson_root, GhFamily, RecoveryOptions, Window,
};
use infdiv::simulate::{empirical_cf, scaling_check, triangular_array_check, Process, ProcessSpec};
use infdiv::CanonicalMeasure;
use num_complex::Complex64;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `n` uniform points on `[lo, hi]`; symmetric ranges give exactly mirrored points.
fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let m = (n - 1) as f64;
    (0..n).map(|i| mid + half * (2.0 * i as f64 - m) / m).collect()
}

fn sup<F: Fn(f64) -> f64>(ts: &[f64], f: F) -> f64 {
    ts.iter().map(|&t| f(t)).fold(0.0, f64::max)
}

fn c1_canonical_forms() -> Outcome {
    let ts = grid(-10.0, 10.0, 201);
    let jumps = CanonicalMeasure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).map_err(|e| e.to_string())?;
    let cp = CompoundPoissonSpec::new(2.0, jumps).map_err(|e| e.to_string())?;
    let cases: Vec<(&str, LevyKhintchinePair, Box<dyn Fn(f64) -> Complex64>)> = vec![
        ("gaussian(0,1)", gaussian(0.0, 1.0).unwrap(), Box::new(|t: f64| Complex64::new(-0.5 * t * t, 0.0))),
        ("poisson(1,1)", poisson(1.0, 1.0).unwrap(), Box::new(|t: f64| Complex64::new(0.0, t).exp() - 1.0)),
        ("cpoisson(2,±1)", cp.to_lk().unwrap(), Box::new(move |t: f64| cf_compound_poisson(&cp, t).ln())),
    ];
    let mut worst: f64 = 0.0;
    for (name, lk, closed) in &cases {
        let kol = lk_to_kolmogorov(lk).map_err(|e| format!("{name}: {e}"))?;
        let levy = lk_to_levy(lk).map_err(|e| format!("{name}: {e}"))?;
        let back_k = kolmogorov_to_lk(&kol).map_err(|e| format!("{name}: {e}"))?;
        let back_l = levy_to_lk(&levy).map_err(|e| format!("{name}: {e}"))?;
        let err = sup(&ts, |t| {
            let base = lk.log_cf(t);
            [closed(t), kol.log_cf(t), levy.log_cf(t), back_k.log_cf(t), back_l.log_cf(t)]
                .iter()
                .map(|v| (v - base).norm())
                .fold(0.0, f64::max)
        });
        worst = worst.max(err);
    }
    check(worst <= 1e-9, format!("max form disagreement {worst:.2e} (tol 1e-9)"))
}

fn c2_poisson_roots() -> Outcome {
    let cf = CharacteristicFunctionGrid::build(|t| (Complex64::new(0.0, t).exp() - 1.0).exp(), 10.0, 2001)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for n in 2..=10u32 {
        let root = nth_root(&cf, n).map_err(|e| e.to_string())?;
        for (t, v) in root.t().iter().zip(root.values()) {
            let exact = ((Complex64::new(0.0, *t).exp() - 1.0) / n as f64).exp();
            worst = worst.max((v - exact).norm());
        }
    }
    check(worst <= 1e-9, format!("max root error {worst:.2e} over n=2..10 (tol 1e-9)"))
}

fn c3_gaussian_delta() -> Outcome {
    let cf = CharacteristicFunctionGrid::build(|t| (-0.5 * t * t).exp().into(), 5.0, 1001).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in grid(-3.0, 3.0, 21) {
        let oracle = -t * t - 1.0 / 3.0 + t * t;
        worst = worst.max((delta(&cf, t).map_err(|e| e.to_string())? - oracle).norm());
    }
    check(worst <= 1e-6, format!("max |Δ + 1/3| {worst:.2e} (tol 1e-6)"))
}

fn c4_inversion() -> Outcome {
    let window = Window::default();
    let u = grid(-5.0, 5.0, 1001);
    let mut details = Vec::new();
    let mut ok = window.half_span * 2.0 >= 80.0;
    for (name, law, loc, mass) in
        [("poisson", poisson(1.0, 1.0).unwrap(), 1.0, 0.5), ("gaussian", gaussian(0.0, 1.0).unwrap(), 0.0, 1.0)]
    {
        let cf = CharacteristicFunctionGrid::from_log(|t| law.log_cf(t), window.half_span + 1.0, 8201)
            .map_err(|e| e.to_string())?;
        let dg = delta_grid(&cf).map_err(|e| e.to_string())?;
        let k = k_from_delta(&dg, &u, &window).map_err(|e| e.to_string())?;
        let rec = g_from_k(&u, &k, &RecoveryOptions::default()).map_err(|e| e.to_string())?;
        let Some(jump) = rec.jumps.iter().min_by(|a, b| (a.location - loc).abs().total_cmp(&(b.location - loc).abs()))
        else {
            return Err(format!("{name}: no atom recovered"));
        };
        let (dl, dm) = ((jump.location - loc).abs(), (jump.mass - mass).abs());
        ok &= rec.jumps.len() == 1 && dl < 0.01 && dm < 2e-3;
        details.push(format!("{name} atom at {:.4} mass {:.5} (|Δloc| {dl:.1e}, |Δmass| {dm:.1e})", jump.location, jump.mass));
    }
    check(ok, format!("t-span {}, raised-cosine taper; {}", window.half_span * 2.0, details.join("; ")))
}

fn c5_limit_extraction() -> Outcome {
    let cf = CharacteristicFunctionGrid::build(|t| (Complex64::new(0.0, t).exp() - 1.0).exp(), 6.0, 1201)
        .map_err(|e| e.to_string())?;
    let roots: Vec<_> = [1e-1, 1e-2, 1e-3].iter().map(|&h| (h, poisson_root(h, 1.0).unwrap())).collect();
    let family = GhFamily::from_roots(cf, &roots).map_err(|e| e.to_string())?;
    let u = grid(-3.0, 3.0, 61);
    let limit = extract_limit(&family, &u).map_err(|e| e.to_string())?;
    let law = LevyKhintchinePair::new(limit.drift, limit.g.clone()).map_err(|e| e.to_string())?;
    let err = sup(&grid(-5.0, 5.0, 201), |t| (law.log_cf(t) - (Complex64::new(0.0, t).exp() - 1.0)).norm());

    let bounds = family.tail_bounds().map_err(|e| e.to_string())?;
    let min_slack = bounds.iter().map(|b| (b.bound_a - b.a).min(b.bound_b - b.b)).fold(f64::INFINITY, f64::min);
    let tails = [2.0, 4.0, 8.0]
        .iter()
        .map(|&a| gnedenko_tail_check(&family, a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    check(
        err <= 1e-3 && min_slack >= 0.0,
        format!("reconstruction error {err:.2e} (tol 1e-3); min tail-bound slack {min_slack:.2e}; tails {tails:?}"),
    )
}

fn c6_definetti() -> Outcome {
    let law = cauchy(1.0).map_err(|e| e.to_string())?;
    let ts = grid(-5.0, 5.0, 201);
    let steps = definetti_sequence_against(&law, &[0.5, 0.1, 0.02], &ts, |t| (-t.abs()).exp().into())
        .map_err(|e| e.to_string())?;
    let errors: Vec<f64> = steps.iter().map(|s| s.error).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    check(decreasing && errors[2] < 0.05, format!("sup errors {errors:?} (last < 0.05, strictly decreasing)"))
}

fn c7_refutation() -> Outcome {
    let (t_max, points) = (10.0, 2001);
    let step = 2.0 * t_max / (points - 1) as f64;
    let sinc = |t: f64| Complex64::new(if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0);
    let report = verify_infinitely_divisible(sinc, t_max, points, &[2, 3], &default_probe_sets(), 1e-8)
        .map_err(|e| e.to_string())?;
    match report.witness {
        Some(Witness::Zero { t }) if !report.pass => {
            let gap = (t.abs() - PI).abs();
            check(gap < step, format!("zero witness at t = {t:.5}, |t|-π gap {gap:.1e} (grid step {step})"))
        }
        other => Err(format!("no zero witness (pass = {}, witness = {other:?})", report.pass)),
    }
}

fn c8_simulation() -> Outcome {
    let n = 100_000;
    let p = Process::new(ProcessSpec::new(poisson(1.0, 1.0).unwrap(), 0.1, 1.0, 20_240_601).unwrap())
        .map_err(|e| e.to_string())?;
    let zeros = p.increments(1.0, n, 0).iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
    let p0_gap = (zeros - (-1.0_f64).exp()).abs();

    let g = Process::new(ProcessSpec::new(gaussian(0.0, 1.0).unwrap(), 0.1, 1.0, 20_240_602).unwrap())
        .map_err(|e| e.to_string())?;
    let ecf = empirical_cf(&g.increments(1.0, n, 0), &grid(-10.0, 10.0, 201)).map_err(|e| e.to_string())?;
    let inside = ecf.fraction_inside(|t| (-0.5 * t * t).exp().into());

    let tg = triangular_array_check(&gaussian(0.0, 1.0).unwrap(), 4, 10_000, 0.1, 20_240_603)
        .map_err(|e| e.to_string())?;
    let tp = triangular_array_check(&poisson(1.0, 1.0).unwrap(), 3, 10_000, 0.1, 20_240_604)
        .map_err(|e| e.to_string())?;
    check(
        p0_gap <= 0.0046 && inside >= 0.99 && tg.ks.pass && tp.ks.pass,
        format!(
            "P(X=0) {zeros:.5} (gap {p0_gap:.1e}, tol 4.6e-3); CF envelope hit rate {inside:.3}; \
             KS gaussian n=4 {:.4}/{:.4}, poisson n=3 {:.4}/{:.4}",
            tg.ks.statistic, tg.ks.critical, tp.ks.statistic, tp.ks.critical
        ),
    )
}

fn c9_scaling() -> Outcome {
    let ts = grid(-5.0, 5.0, 101);
    let mut ok = true;
    let mut details = Vec::new();
    for (name, law, seed) in [("poisson", poisson(1.0, 1.0).unwrap(), 91), ("gaussian", gaussian(0.0, 1.0).unwrap(), 92)] {
        let r = scaling_check(&law, &ts, &[0.5, 2.0], 100_000, 0.1, seed).map_err(|e| e.to_string())?;
        ok &= r.pass;
        for e in &r.entries {
            details.push(format!("{name} λ={}: identity {:.1e}, inside {:.3}", e.lambda, e.identity_error, e.fraction_inside));
        }
    }
    check(ok, details.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("canonical-form equivalence", c1_canonical_forms, 1),
        ("Poisson root identity", c2_poisson_roots, 1),
        ("Gaussian Δ constant", c3_gaussian_delta, 1),
        ("inversion round trip", c4_inversion, 30),
        ("limit extraction and tail bounds", c5_limit_extraction, 10),
        ("de Finetti convergence", c6_definetti, 10),
        ("non-divisibility refutation", c7_refutation, 1),
        ("simulation fidelity", c8_simulation, 60),
        ("scaling law", c9_scaling, 30),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {detail} [{:.2}s, budget {budget}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
