//! Numerically stable integrands shared by the canonical forms and the
//! inversion code.
//!
//! The canonical integrands all have removable singularities at `u = 0`.
//! Away from zero they are evaluated without cancellation by writing
//! `e^{ix} - 1 = -2 sin^2(x/2) + i sin x` and expanding `sin x - x` in a
//! series for small arguments. At exactly `u = 0` they return NaN so that
//! measure integration can demand an explicit atom override.

use num_complex::Complex64;

/// `sin x - x`, accurate for small `x`.
pub fn sin_minus_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        // Horner form of -x^3/3! + x^5/5! - x^7/7! + x^9/9! - x^11/11! + x^13/13!
        x * x2
            * (-1.0 / 6.0
                + x2 * (1.0 / 120.0
                    + x2 * (-1.0 / 5040.0
                        + x2 * (1.0 / 362_880.0
                            + x2 * (-1.0 / 39_916_800.0 + x2 / 6_227_020_800.0)))))
    } else {
        x.sin() - x
    }
}

/// `(sin x - x) / x`, accurate for small `x` and 0 at `x = 0`.
pub fn sin_minus_x_over_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        x2 * (-1.0 / 6.0
            + x2 * (1.0 / 120.0
                + x2 * (-1.0 / 5040.0 + x2 * (1.0 / 362_880.0 + x2 * (-1.0 / 39_916_800.0 + x2 / 6_227_020_800.0)))))
    } else {
        x.sin() / x - 1.0
    }
}

/// The integrands stay finite on valid measures unless `t u` overflows;
/// evaluators report that case as NaN instead of failing.
pub(crate) fn or_nan(r: crate::Result<Complex64>) -> Complex64 {
    r.unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// `e^{ix} - 1`.
pub fn expm1_i(x: f64) -> Complex64 {
    let (s, c) = (0.5 * x).sin_cos();
    Complex64::new(-2.0 * s * s, 2.0 * s * c)
}

/// Lévy–Khintchine integrand `(e^{itu} - 1 - itu/(1+u^2)) (1+u^2)/u^2`.
/// Its value at `u = 0` is `-t^2/2`; this function returns NaN there.
pub fn lk_integrand(t: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let x = t * u;
    let s = (0.5 * x).sin();
    // (1+u^2)/u^2 arranged so that neither u^2 overflow nor underflow leaks in
    let re = if u.abs() >= 1.0 { -2.0 * s * s * (1.0 + 1.0 / (u * u)) } else { -2.0 * (s / u).powi(2) * (1.0 + u * u) };
    let im = sin_minus_x_over_x(x) * (t / u) + x.sin();
    Complex64::new(re, im)
}

/// Kolmogorov integrand `(e^{itu} - 1 - itu)/u^2`; `-t^2/2` at zero, NaN here.
pub fn kolmogorov_integrand(t: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let x = t * u;
    let half = (0.5 * x).sin() / u;
    Complex64::new(-2.0 * half * half, sin_minus_x_over_x(x) * (t / u))
}

/// Lévy integrand `e^{itu} - 1 - itu/(1+u^2)`; regular everywhere.
pub fn levy_integrand(t: f64, u: f64) -> Complex64 {
    let x = t * u;
    let e = expm1_i(x);
    Complex64::new(e.re, e.im - x / (1.0 + u * u))
}

/// `(v - sin v)/v^3`, which tends to 1/6 at zero.
fn v_minus_sin_over_v3(v: f64) -> f64 {
    if v.abs() < 0.5 {
        let v2 = v * v;
        1.0 / 6.0
            + v2 * (-1.0 / 120.0
                + v2 * (1.0 / 5040.0
                    + v2 * (-1.0 / 362_880.0 + v2 * (1.0 / 39_916_800.0 - v2 / 6_227_020_800.0))))
    } else {
        (v - v.sin()) / (v * v * v)
    }
}

/// Forward weight of the inversion pipeline:
/// `-2 (1 - sin v / v) (1 + v^2)/v^2`, with limit `-1/3` at `v = 0`.
pub fn inversion_weight(v: f64) -> f64 {
    -2.0 * v_minus_sin_over_v3(v) * (1.0 + v * v)
}
