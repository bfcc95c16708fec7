//! Khinchin's construction of the canonical measure and its inverse.
//!
//! Forward direction: the h-th convolution roots of a law give measures
//! `dG_h = v^2/(1+v^2) dphi_h(v) / h` whose limit as `h -> 0` is the
//! canonical `G`. The tail bounds keep the family tight and
//! [`extract_limit`] reads off the limit numerically.
//!
//! Inverse direction: `Δ(t) = ∫_{t-1}^{t+1} log phi - 2 log phi(t)` is the
//! Fourier transform of `dK(u) = w(u) dG(u)` with
//! `w(u) = -2 (1 - sin u / u) (1+u^2)/u^2` (limit `-1/3` at zero, see
//! [`crate::kernel::inversion_weight`]). A windowed Lévy inversion gives
//! `K`, whose steps and slopes divided by `w` give back `G`.
//!
//! Finally [`truncate_cp`] splits a law into drift, Gaussian part and a
//! compound-Poisson part carrying the jumps larger than `epsilon`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::canonical_forms::{CompoundPoissonSpec, LevyKhintchinePair};
use crate::divisibility::CharacteristicFunctionGrid;
use crate::error::{Error, Result};
use crate::kernel::{inversion_weight, or_nan};
use crate::measure::{CanonicalMeasure, Interval};
use crate::quadrature::Rule;

const BOUND_TOLERANCE: f64 = 1e-9;

/// `reweight(root, v^2/(1+v^2))` scaled by `1/h`.
pub fn g_h_from_root(root: &CanonicalMeasure, h: f64) -> Result<CanonicalMeasure> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter(format!("h must be positive, got {h}")));
    }
    Ok(root
        .reweight(|v| v * v / (1.0 + v * v), &[(0.0, 0.0)])?
        .scale(1.0 / h))
}

/// Distribution of `Poisson(mean) * jump`, truncated where the remaining
/// probability drops below 1e-17.
pub fn poisson_root(mean: f64, jump: f64) -> Result<CanonicalMeasure> {
    if !(mean.is_finite() && mean > 0.0) || !jump.is_finite() || jump == 0.0 {
        return Err(Error::BadParameter("poisson root needs mean > 0 and a non-zero jump".into()));
    }
    let mut atoms = Vec::new();
    let mut p = (-mean).exp();
    let mut cumulative = 0.0;
    for k in 0..10_000u32 {
        atoms.push((k as f64 * jump, p));
        cumulative += p;
        if 1.0 - cumulative < 1e-17 && k as f64 > mean {
            break;
        }
        p *= mean / (k + 1) as f64;
    }
    CanonicalMeasure::from_atoms(&atoms)
}

/// `Normal(0, variance)` as cell averages on `cells` (odd) cells spanning
/// eight standard deviations each way, with 0 at the centre of a cell.
pub fn normal_root(variance: f64, cells: usize) -> Result<CanonicalMeasure> {
    if !(variance.is_finite() && variance > 0.0) || cells < 3 || cells % 2 == 0 {
        return Err(Error::BadParameter("normal root needs variance > 0 and an odd cell count".into()));
    }
    let sd = variance.sqrt();
    let half = 8.0 * sd;
    let w = 2.0 * half / cells as f64;
    let edges: Vec<f64> = (0..=cells).map(|i| -half + i as f64 * w).collect();
    let cdf = |x: f64| 0.5 * erfc(-x / (sd * std::f64::consts::SQRT_2));
    let values: Vec<f64> = edges.windows(2).map(|e| (cdf(e[1]) - cdf(e[0])) / (e[1] - e[0])).collect();
    let total: f64 = values.iter().sum::<f64>() * w;
    CanonicalMeasure::density(edges, values.iter().map(|v| v / total).collect())
}

fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// `(phi(t)^h - 1)/h` along the unwrapped branch.
pub fn i_h(cf: &CharacteristicFunctionGrid, h: f64, t: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let l = cf.log_at(t)?;
    Ok(expm1_complex(l * h) / h)
}

fn expm1_complex(z: Complex64) -> Complex64 {
    // e^z - 1 = e^x (cos y + i sin y) - 1, kept accurate for small |z|
    let (s, c) = (0.5 * z.im).sin_cos();
    let ex = z.re.exp_m1();
    let cos_m1 = -2.0 * s * s;
    Complex64::new(ex * (1.0 + cos_m1) + cos_m1, (ex + 1.0) * 2.0 * s * c)
}

fn integrate_re_i_h(cf: &CharacteristicFunctionGrid, h: f64, b: f64) -> Result<f64> {
    let rule = Rule::default();
    let pieces = 16;
    let mut total = 0.0;
    let mut err = None;
    for k in 0..pieces {
        let lo = b * k as f64 / pieces as f64;
        let hi = b * (k + 1) as f64 / pieces as f64;
        total += rule.integrate(lo, hi, |t| match i_h(cf, h, t) {
            Ok(v) => v.re,
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `min over 0 < |u| <= 1 of (1 - cos u)(1+u^2)/u^2`, including the limit 1/2
/// at zero.
pub fn tail_constant() -> f64 {
    let n = 10_000;
    (1..=n)
        .map(|k| {
            let u = k as f64 / n as f64;
            let s = (0.5 * u).sin();
            2.0 * s * s * (1.0 + u * u) / (u * u)
        })
        .fold(0.5, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBounds {
    /// `mass(|u| <= 1)`
    pub a: f64,
    /// `mass(|u| > 1)`
    pub b: f64,
    pub c: f64,
    /// `-Re I_h(1) / c_const`
    pub bound_a: f64,
    /// `-∫_0^2 Re I_h`
    pub bound_b: f64,
    pub c_const: f64,
}

fn check_bound(which: &'static str, lhs: f64, rhs: f64) -> Result<()> {
    if lhs > rhs + BOUND_TOLERANCE * (1.0 + rhs.abs()) {
        return Err(Error::BoundViolated { which, lhs, rhs });
    }
    Ok(())
}

/// Compute both tail bounds for `G_h` and verify them against the
/// characteristic function `cf` of the parent law.
pub fn tail_bounds(g_h: &CanonicalMeasure, cf: &CharacteristicFunctionGrid, h: f64) -> Result<TailBounds> {
    let a = g_h.mass_in(Interval::closed(-1.0, 1.0));
    let b = g_h.mass_in(Interval::below(-1.0)) + g_h.mass_in(Interval::above(1.0));
    let c_const = tail_constant();
    let bound_a = -i_h(cf, h, 1.0)?.re / c_const;
    let bound_b = -integrate_re_i_h(cf, h, 2.0)?;
    check_bound("central mass bound", a, bound_a)?;
    check_bound("outer mass bound", b, bound_b)?;
    Ok(TailBounds { a, b, c: a + b, bound_a, bound_b, c_const })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhEntry {
    pub h: f64,
    pub g: CanonicalMeasure,
}

/// `G_h` measures for strictly decreasing `h`, together with the parent
/// characteristic function they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GhFamily {
    entries: Vec<GhEntry>,
    cf: CharacteristicFunctionGrid,
    mass_bound: f64,
}

impl GhFamily {
    pub fn new(cf: CharacteristicFunctionGrid, entries: Vec<GhEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].h >= w[0].h) {
            return Err(Error::BadParameter("h must decrease strictly across the family".into()));
        }
        let mass_bound = entries.iter().map(|e| e.g.total_mass()).fold(0.0, f64::max);
        Ok(Self { entries, cf, mass_bound })
    }

    /// Build entries with [`g_h_from_root`] from `(h, root distribution)` pairs.
    pub fn from_roots(cf: CharacteristicFunctionGrid, roots: &[(f64, CanonicalMeasure)]) -> Result<Self> {
        let entries = roots
            .iter()
            .map(|(h, root)| Ok(GhEntry { h: *h, g: g_h_from_root(root, *h)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cf, entries)
    }

    pub fn entries(&self) -> &[GhEntry] {
        &self.entries
    }

    pub fn cf(&self) -> &CharacteristicFunctionGrid {
        &self.cf
    }

    pub fn mass_bound(&self) -> f64 {
        self.mass_bound
    }

    /// [`tail_bounds`] for every entry.
    pub fn tail_bounds(&self) -> Result<Vec<TailBounds>> {
        self.entries.iter().map(|e| tail_bounds(&e.g, &self.cf, e.h)).collect()
    }
}

/// `sup_h mass(|u| >= alpha)`, verifying for every entry that the tail mass
/// is at most `-alpha ∫_0^{2/alpha} Re I_h`.
pub fn gnedenko_tail_check(family: &GhFamily, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::BadParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    let mut sup: f64 = 0.0;
    for e in &family.entries {
        let tail = e.g.mass_in(Interval { lo: f64::NEG_INFINITY, hi: -alpha, lo_closed: false, hi_closed: true })
            + e.g.mass_in(Interval { lo: alpha, hi: f64::INFINITY, lo_closed: true, hi_closed: false });
        let bound = -alpha * integrate_re_i_h(&family.cf, e.h, 2.0 / alpha)?;
        check_bound("uniform tail bound", tail, bound)?;
        sup = sup.max(tail);
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResult {
    pub g: CanonicalMeasure,
    pub drift: f64,
    /// Largest `|log phi - log phi_reconstructed|` over the family's grid
    /// points with `|t| <= 5`.
    pub reconstruction_error: f64,
}

/// Default threshold for successive extrapolated sweeps.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

fn richardson(h1: f64, v1: f64, h2: f64, v2: f64) -> f64 {
    (h1 * v2 - h2 * v1) / (h1 - h2)
}

/// Limit of the family as `h -> 0`; see [`extract_limit_with`].
pub fn extract_limit(family: &GhFamily, u_grid: &[f64]) -> Result<LimitResult> {
    extract_limit_with(family, u_grid, CONVERGENCE_THRESHOLD)
}

/// Extrapolate the cumulative functions of the family linearly in `h` to
/// zero, using the two smallest `h`, on every point of `u_grid`.
///
/// Each increment of the limit between neighbouring grid points becomes an
/// atom at the centre of mass of the smallest-`h` measure on that interval.
/// The same extrapolation applied to the two largest `h` must agree within
/// `threshold`, otherwise the family is reported as not converging.
pub fn extract_limit_with(family: &GhFamily, u_grid: &[f64], threshold: f64) -> Result<LimitResult> {
    let e = &family.entries;
    if e.len() < 3 {
        return Err(Error::BadParameter("limit extraction needs at least three entries".into()));
    }
    if u_grid.is_empty() || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParameter("u grid must be non-empty and increasing".into()));
    }
    let n = e.len();
    let (a, b, c) = (&e[n - 3], &e[n - 2], &e[n - 1]);

    let mut points: Vec<f64> = u_grid.to_vec();
    points.push(f64::INFINITY);
    let mut limit = Vec::with_capacity(points.len());
    for &u in &points {
        let (ca, cb, cc) = (a.g.cdf(u), b.g.cdf(u), c.g.cdf(u));
        let coarse = richardson(a.h, ca, b.h, cb);
        let fine = richardson(b.h, cb, c.h, cc);
        if (coarse - fine).abs() > threshold {
            return Err(Error::NoConvergence { u, difference: (coarse - fine).abs(), threshold });
        }
        limit.push(fine);
    }

    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut level: f64 = 0.0;
    let mut lower = f64::NEG_INFINITY;
    for (&u, &l) in points.iter().zip(&limit) {
        let increment = l - level;
        if increment > 0.0 {
            let iv = Interval { lo: lower, hi: u, lo_closed: false, hi_closed: true };
            let piece = c.g.restrict(iv);
            let mass = piece.total_mass();
            let loc = if mass > 0.0 {
                piece.integrate_real(|x| x, &[])? / mass
            } else if lower.is_finite() && u.is_finite() {
                0.5 * (lower + u)
            } else {
                u.min(lower.max(0.0))
            };
            if loc.is_finite() {
                match atoms.iter_mut().find(|(x, _)| *x == loc) {
                    Some(entry) => entry.1 += increment,
                    None => atoms.push((loc, increment)),
                }
            }
            level = l;
        }
        lower = u;
    }
    // increments split by a grid point inside a concentrating region
    let spacing = u_grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (loc, mass) in atoms {
        match merged.last_mut() {
            Some((l, m)) if (loc - *l).abs() < 0.1 * spacing => {
                *l = (*l * *m + loc * mass) / (*m + mass);
                *m += mass;
            }
            _ => merged.push((loc, mass)),
        }
    }
    for (loc, _) in merged.iter_mut() {
        if loc.abs() <= 1e-9 {
            *loc = 0.0;
        }
    }
    let g = CanonicalMeasure::from_atoms(&merged)?;

    let gamma_of = |m: &CanonicalMeasure| m.integrate_real(|x| 1.0 / x, &[(0.0, 0.0)]);
    let drift = richardson(b.h, gamma_of(&b.g)?, c.h, gamma_of(&c.g)?);

    let law = LevyKhintchinePair::new(drift, g.clone())?;
    let reconstruction_error = family
        .cf
        .t()
        .iter()
        .zip(family.cf.log_values())
        .filter(|(t, _)| t.abs() <= 5.0)
        .map(|(&t, l)| (law.log_cf(t) - l).norm())
        .fold(0.0, f64::max);
    Ok(LimitResult { g, drift, reconstruction_error })
}

/// `Δ(t) = ∫_{t-1}^{t+1} log phi - 2 log phi(t)`.
pub fn delta(cf: &CharacteristicFunctionGrid, t: f64) -> Result<Complex64> {
    let span = cf.t_max();
    if t.abs() + 1.0 > span * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { t, span: span - 1.0 });
    }
    Ok(cf.integrate_log(t - 1.0, t + 1.0)? - cf.log_at(t)? * 2.0)
}

/// `Δ` sampled on a symmetric uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGrid {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl DeltaGrid {
    pub fn span(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }
}

/// `Δ` at every point of the characteristic-function grid with
/// `|t| <= t_max - 1`.
pub fn delta_grid(cf: &CharacteristicFunctionGrid) -> Result<DeltaGrid> {
    let h = cf.step();
    let shift = (1.0 / h).round();
    let aligned = ((1.0 / h) - shift).abs() < 1e-9;
    let prefix = if aligned { Some(cf.log_prefix_integrals()) } else { None };
    let m = shift as usize;
    let mut t = Vec::new();
    let mut values = Vec::new();
    let limit = cf.t_max() - 1.0;
    for (k, (&tk, &lk)) in cf.t().iter().zip(cf.log_values()).enumerate() {
        if tk.abs() > limit * (1.0 + 1e-12) {
            continue;
        }
        let v = match &prefix {
            Some(p) if k >= m && k + m < p.len() => p[k + m] - p[k - m] - lk * 2.0,
            _ => delta(cf, tk)?,
        };
        t.push(tk);
        values.push(v);
    }
    Ok(DeltaGrid { t, values })
}

/// `Δ` computed directly from a canonical measure: `∫ e^{itu} w(u) dG(u)`.
pub fn delta_from_measure(g: &CanonicalMeasure, t: f64) -> Complex64 {
    g.integrate(
        |u| Complex64::new(0.0, t * u).exp() * inversion_weight(u),
        &[(0.0, Complex64::new(inversion_weight(0.0), 0.0))],
    )
    .expect("inversion weight is finite")
}

/// Truncation window for the inversion integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    /// Half-width `T` of the integration range `[-T, T]`.
    pub half_span: f64,
    /// The raised-cosine taper runs over `taper_start * T <= |t| <= T`.
    pub taper_start: f64,
    /// Smallest accepted `T`.
    pub minimum_half_span: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { half_span: 40.0, taper_start: 0.5, minimum_half_span: 40.0 }
    }
}

impl Window {
    pub fn weight(&self, t: f64) -> f64 {
        let a = t.abs();
        let start = self.taper_start * self.half_span;
        if a <= start {
            1.0
        } else if a >= self.half_span {
            0.0
        } else {
            0.5 * (1.0 + (PI * (a - start) / (self.half_span - start)).cos())
        }
    }
}

/// `K(u) = (1/2π) ∫ (1 - e^{-itu})/(it) Δ(t) dt` as a windowed symmetric
/// limit, evaluated by the trapezoidal rule on the `Δ` grid.
pub fn k_from_delta(delta: &DeltaGrid, u_points: &[f64], window: &Window) -> Result<Vec<f64>> {
    if window.half_span < window.minimum_half_span {
        return Err(Error::InsufficientSpan { span: window.half_span, minimum: window.minimum_half_span });
    }
    if delta.span() < window.half_span * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpan { span: delta.span(), minimum: window.half_span });
    }
    let dt = delta.t[1] - delta.t[0];
    let samples: Vec<(f64, Complex64, f64)> = delta
        .t
        .iter()
        .zip(&delta.values)
        .filter(|(t, _)| **t >= 0.0 && **t <= window.half_span * (1.0 + 1e-12))
        .map(|(&t, &d)| {
            let w = window.weight(t) * if t == 0.0 { 0.5 } else { 1.0 };
            (t, d, w)
        })
        .filter(|s| s.2 > 0.0)
        .collect();
    Ok(u_points
        .iter()
        .map(|&u| {
            if u == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for &(t, d, w) in &samples {
                let kernel = if t == 0.0 {
                    Complex64::new(u, 0.0)
                } else {
                    let (s, c) = (t * u).sin_cos();
                    // (1 - e^{-itu})/(it) = (sin tu)/t + i (cos tu - 1)/t
                    Complex64::new(s / t, (c - 1.0) / t)
                };
                acc += (kernel * d).re * w;
            }
            acc * dt / PI
        })
        .collect())
}

/// Options for [`g_from_k`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryOptions {
    /// Width of the density cells, and of the band around 0 in which a jump
    /// is attributed to the origin.
    pub guard_band: f64,
    /// Allowed local increase of the non-increasing `K`, relative to the
    /// range of `K`, measured from the lowest earlier sample. Windowed
    /// inversion rings by several percent of a step on either side of it.
    pub sign_tolerance: f64,
    /// Increments larger than this multiple of the median count as jumps.
    pub jump_factor: f64,
    /// Slopes of the continuous part below this are treated as noise.
    pub density_floor: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { guard_band: 0.05, sign_tolerance: 0.1, jump_factor: 5.0, density_floor: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectedJump {
    pub location: f64,
    pub step: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub g: CanonicalMeasure,
    pub jumps: Vec<DetectedJump>,
}

fn mean_over(u: &[f64], k: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (sum, count) = u
        .iter()
        .zip(k)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Recover `G` from samples of `K` on an increasing uniform `u_grid`.
///
/// Jumps of `K` become atoms (step divided by the inversion weight at the
/// jump); the remaining slope becomes a density on cells of width
/// `guard_band`. Step heights are read from plateau averages on either side
/// of each jump, solved jointly so that neighbouring jumps do not bias each
/// other, and the density is not read within half a unit of a jump.
pub fn g_from_k(u_grid: &[f64], k_values: &[f64], opts: &RecoveryOptions) -> Result<Recovery> {
    let ideal = |a: f64| -> Result<Vec<f64>> { Ok(u_grid.iter().map(|&u| heaviside(u - a) - heaviside(-a)).collect()) };
    let (locations, steps, responses) = refine(u_grid, k_values, detect_jumps(u_grid, k_values, opts)?, &ideal, JumpModel::Ideal)?;
    let (jumps, responses) = finish(locations, steps, responses);
    let residual = subtract(k_values, &jumps, &responses);
    let band = |u: f64| jumps.iter().any(|j| (u - j.location).abs() < 0.5);
    assemble(u_grid, &residual, opts, jumps.clone(), &band)
}

/// As [`g_from_k`] for samples produced by [`k_from_delta`] with `window`
/// on a `t` grid of spacing `t_step`. Jumps are resolved against their exact
/// windowed responses, ringing included, and those responses are removed
/// before the density is read, so no band around the jumps is skipped.
pub fn g_from_k_windowed(
    u_grid: &[f64],
    k_values: &[f64],
    window: &Window,
    t_step: f64,
    opts: &RecoveryOptions,
) -> Result<Recovery> {
    if !(t_step > 0.0) {
        return Err(Error::BadParameter("t step must be positive".into()));
    }
    let m = (window.half_span / t_step).ceil() as i64;
    let t: Vec<f64> = (-m..=m).map(|i| i as f64 * t_step).collect();
    let windowed = |a: f64| -> Result<Vec<f64>> {
        let values = t.iter().map(|&t| Complex64::cis(t * a)).collect();
        k_from_delta(&DeltaGrid { t: t.clone(), values }, u_grid, window)
    };
    let (jumps, responses) = pursue_jumps(u_grid, k_values, opts, &windowed)?;
    let residual = subtract(k_values, &jumps, &responses);
    assemble(u_grid, &residual, opts, jumps, &|_| false)
}

fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

fn subtract(k_values: &[f64], jumps: &[DetectedJump], responses: &[Vec<f64>]) -> Vec<f64> {
    let steps: Vec<f64> = jumps.iter().map(|j| j.step).collect();
    residual_after(k_values, &steps, responses)
}

/// Validate the samples, check that `K` does not rise, and return the
/// increment size above which a jump is suspected.
fn jump_floor(u_grid: &[f64], k_values: &[f64], opts: &RecoveryOptions) -> Result<f64> {
    let n = u_grid.len();
    if n != k_values.len() || n < 3 || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParameter("u grid must be increasing and match the K samples".into()));
    }
    let range = k_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - k_values.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = (opts.sign_tolerance * range).max(1e-12);
    let mut lowest = k_values[0];
    for i in 1..n {
        let increase = k_values[i] - lowest;
        if increase > tolerance {
            return Err(Error::SignViolation { u: u_grid[i], increase, tolerance });
        }
        lowest = lowest.min(k_values[i]);
    }
    let mut increments: Vec<f64> = k_values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    increments.sort_by(|a, b| a.total_cmp(b));
    let median = increments[increments.len() / 2];
    Ok((opts.jump_factor * median).max(1e-3 * range).max(1e-12))
}

/// Jump locations from clusters of large increments, each placed where `K`
/// crosses the midpoint of its neighbouring plateaus.
fn detect_jumps(u_grid: &[f64], k_values: &[f64], opts: &RecoveryOptions) -> Result<Vec<f64>> {
    let floor = jump_floor(u_grid, k_values, opts)?;
    let du = grid_step(u_grid);
    let increments: Vec<f64> = k_values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();

    // clusters of large increments, merged across gaps narrower than the guard band
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for (i, &d) in increments.iter().enumerate() {
        if d <= floor {
            continue;
        }
        match clusters.last_mut() {
            Some((_, end)) if (u_grid[i] - u_grid[*end + 1]) <= opts.guard_band => *end = i,
            _ => clusters.push((i, i)),
        }
    }

    let centres: Vec<f64> = clusters.iter().map(|&(s, e)| 0.5 * (u_grid[s] + u_grid[e + 1])).collect();
    let windows = plateau_windows(&centres, du, JumpModel::Ideal.reach());
    Ok(clusters
        .iter()
        .zip(&centres)
        .zip(&windows)
        .map(|((&(s, e), &centre), w)| {
            let left = mean_over(u_grid, k_values, w.0 .0, w.0 .1).unwrap_or(k_values[s]);
            let right = mean_over(u_grid, k_values, w.1 .0, w.1 .1).unwrap_or(k_values[e + 1]);
            crossing(u_grid, k_values, 0.5 * (left + right), u_grid[s], u_grid[e + 1]).unwrap_or(centre)
        })
        .collect())
}

fn grid_step(u_grid: &[f64]) -> f64 {
    (u_grid[u_grid.len() - 1] - u_grid[0]) / (u_grid.len() - 1) as f64
}

type Span = (f64, f64);

/// How jump responses relate to the samples.
#[derive(Clone, Copy, PartialEq)]
enum JumpModel {
    /// Ideal steps: the ringing of windowed samples is not modelled, so
    /// plateaus must clear it and crossings are taken as found.
    Ideal,
    /// Exact windowed responses: ringing is modelled, so short plateaus keep
    /// unresolved neighbours and density slope out, and the crossing bias of
    /// the response itself is removed.
    Windowed,
}

impl JumpModel {
    fn reach(self) -> f64 {
        match self {
            JumpModel::Ideal => 0.5,
            JumpModel::Windowed => 0.1,
        }
    }
}

/// Left and right plateau ranges for each jump: from `near` to `2 near`
/// away, with `near` at most `reach` and a third of the gap to the
/// neighbouring jumps.
fn plateau_windows(locations: &[f64], du: f64, reach: f64) -> Vec<(Span, Span)> {
    locations
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let gap_left = if j > 0 { c - locations[j - 1] } else { f64::INFINITY };
            let gap_right = if j + 1 < locations.len() { locations[j + 1] - c } else { f64::INFINITY };
            let near = reach.min(gap_left / 3.0).min(gap_right / 3.0).max(du);
            let far = (2.0 * near).min(1.0);
            ((c - far, c - near), (c + near, c + far))
        })
        .collect()
}

/// Crossing of `level` by the sampled curve within `[lo, hi]`, closest to
/// the middle of that range.
fn crossing(u: &[f64], k: &[f64], level: f64, lo: f64, hi: f64) -> Option<f64> {
    let target = 0.5 * (lo + hi);
    (0..u.len() - 1)
        .filter(|&i| u[i + 1] >= lo && u[i] <= hi)
        .filter_map(|i| {
            let (k0, k1) = (k[i], k[i + 1]);
            ((k0 - level) * (k1 - level) <= 0.0 && k0 != k1).then(|| u[i] + (level - k0) / (k1 - k0) * (u[i + 1] - u[i]))
        })
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

fn midpoint_crossing(u: &[f64], k: &[f64], w: &(Span, Span)) -> Option<f64> {
    let left = mean_over(u, k, w.0 .0, w.0 .1)?;
    let right = mean_over(u, k, w.1 .0, w.1 .1)?;
    crossing(u, k, 0.5 * (left + right), w.0 .1, w.1 .0)
}

fn plateau_step(u: &[f64], k: &[f64], w: &(Span, Span)) -> f64 {
    let nearest = |x: f64| k[u.partition_point(|&v| v < x).min(u.len() - 1)];
    let left = mean_over(u, k, w.0 .0, w.0 .1).unwrap_or_else(|| nearest(w.0 .1));
    let right = mean_over(u, k, w.1 .0, w.1 .1).unwrap_or_else(|| nearest(w.1 .0));
    right - left
}

type Response<'a> = dyn Fn(f64) -> Result<Vec<f64>> + 'a;

/// Alternate between solving for all step heights at once (plateau reading
/// of `K` against the plateau readings of each jump's unit `response`) and
/// relocating every jump on `K` with the other jumps' responses removed.
/// Returns the final locations, steps and responses.
fn refine(
    u_grid: &[f64],
    k_values: &[f64],
    mut locations: Vec<f64>,
    response: &Response,
    model: JumpModel,
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    const ROUNDS: usize = 3;
    if locations.is_empty() {
        return Ok((locations, Vec::new(), Vec::new()));
    }
    let du = grid_step(u_grid);
    let mut steps = Vec::new();
    let mut responses = Vec::new();
    for round in 0..=ROUNDS {
        for a in locations.iter_mut() {
            if a.abs() < du {
                *a = 0.0;
            }
        }
        locations.sort_by(|a, b| a.total_cmp(b));
        responses = locations.iter().map(|&a| response(a)).collect::<Result<Vec<_>>>()?;
        let windows = plateau_windows(&locations, du, model.reach());
        let n = locations.len();
        let a = DMatrix::from_fn(n, n, |j, i| plateau_step(u_grid, &responses[i], &windows[j]));
        let b = DVector::from_fn(n, |j, _| plateau_step(u_grid, k_values, &windows[j]));
        steps = match a.clone().lu().solve(&b) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s.iter().copied().collect(),
            _ => (0..n).map(|j| b[j] / a[(j, j)]).collect(),
        };
        if round == ROUNDS {
            break;
        }
        for j in 0..n {
            let cleaned: Vec<f64> = (0..u_grid.len())
                .map(|p| k_values[p] - (0..n).filter(|&i| i != j).map(|i| steps[i] * responses[i][p]).sum::<f64>())
                .collect();
            let w = &windows[j];
            let Some(x) = midpoint_crossing(u_grid, &cleaned, w) else { continue };
            locations[j] = match model {
                JumpModel::Ideal => x,
                // the same reading on the jump's own response measures the
                // bias of the crossing
                JumpModel::Windowed => match midpoint_crossing(u_grid, &responses[j], w) {
                    Some(x_model) => locations[j] + x - x_model,
                    None => x,
                },
            };
        }
    }
    Ok((locations, steps, responses))
}

/// Keep the jumps carrying positive mass, with their responses.
fn finish(locations: Vec<f64>, steps: Vec<f64>, responses: Vec<Vec<f64>>) -> (Vec<DetectedJump>, Vec<Vec<f64>>) {
    let mut jumps = Vec::new();
    let mut kept = Vec::new();
    for ((location, step), r) in locations.into_iter().zip(steps).zip(responses) {
        let mass = step / inversion_weight(location);
        if mass > 0.0 {
            jumps.push(DetectedJump { location, step, mass });
            kept.push(r);
        }
    }
    (jumps, kept)
}

/// Greedy jump search for windowed samples. The largest local peak of the
/// increments left after removing the jumps found so far is tried as the
/// next jump: it is kept when subtracting its fitted response removes most
/// of the peak with positive mass, and otherwise marked as continuous
/// slope. The search ends when no peak exceeds the jump floor.
fn pursue_jumps(
    u_grid: &[f64],
    k_values: &[f64],
    opts: &RecoveryOptions,
    response: &Response,
) -> Result<(Vec<DetectedJump>, Vec<Vec<f64>>)> {
    const MAX_TRIALS: usize = 64;
    // share of a peak a genuine jump's response must remove
    const EXPLAINED: f64 = 0.75;
    let floor = jump_floor(u_grid, k_values, opts)?;
    let du = grid_step(u_grid);
    let reach = JumpModel::Windowed.reach();
    let mut fit = (Vec::new(), Vec::new(), Vec::new());
    let mut rejected: Vec<f64> = Vec::new();
    let mut residual = k_values.to_vec();
    for _ in 0..MAX_TRIALS {
        let inc: Vec<f64> = residual.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let peak = (0..inc.len())
            .filter(|&i| (i == 0 || inc[i] >= inc[i - 1]) && (i + 1 == inc.len() || inc[i] >= inc[i + 1]))
            .map(|i| (0.5 * (u_grid[i] + u_grid[i + 1]), inc[i]))
            .filter(|(u, _)| fit.0.iter().all(|a: &f64| (u - a).abs() > opts.guard_band))
            .filter(|(u, _)| rejected.iter().all(|a| (u - a).abs() > reach))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((u, size)) = peak.filter(|p| p.1 > floor) else { break };
        let u = if u.abs() < du { 0.0 } else { u };

        let r = response(u)?;
        let w = plateau_windows(&[u], du, reach)[0];
        let step = plateau_step(u_grid, &residual, &w) / plateau_step(u_grid, &r, &w);
        let left_after = u_grid
            .windows(2)
            .enumerate()
            .filter(|(_, x)| (0.5 * (x[0] + x[1]) - u).abs() <= opts.guard_band)
            .map(|(i, _)| (residual[i + 1] - step * r[i + 1] - residual[i] + step * r[i]).abs())
            .fold(0.0, f64::max);
        if !(step / inversion_weight(u) > 0.0 && left_after <= (1.0 - EXPLAINED) * size) {
            rejected.push(u);
            continue;
        }
        let mut next = fit.0.clone();
        next.push(u);
        fit = refine(u_grid, k_values, next, response, JumpModel::Windowed)?;
        residual = residual_after(k_values, &fit.1, &fit.2);
    }
    Ok(finish(fit.0, fit.1, fit.2))
}

fn residual_after(k_values: &[f64], steps: &[f64], responses: &[Vec<f64>]) -> Vec<f64> {
    k_values
        .iter()
        .enumerate()
        .map(|(i, &k)| k - steps.iter().zip(responses).map(|(s, r)| s * r[i]).sum::<f64>())
        .collect()
}

fn assemble(
    u_grid: &[f64],
    residual: &[f64],
    opts: &RecoveryOptions,
    jumps: Vec<DetectedJump>,
    excluded: &dyn Fn(f64) -> bool,
) -> Result<Recovery> {
    let n = u_grid.len();
    let du = (u_grid[n - 1] - u_grid[0]) / (n - 1) as f64;
    let width = opts.guard_band.max(du);
    let cells = ((u_grid[n - 1] - u_grid[0]) / width).floor() as usize;
    let sample = |u: f64| -> f64 {
        let i = (((u - u_grid[0]) / du).round() as usize).min(n - 1);
        residual[i]
    };
    let mut edges = Vec::new();
    let mut values = Vec::new();
    for c in 0..cells {
        let lo = u_grid[0] + c as f64 * width;
        let hi = lo + width;
        edges.push(lo);
        let slope = (sample(hi) - sample(lo)) / width;
        let keep = !excluded(lo) && !excluded(hi) && -slope > opts.density_floor;
        values.push(if keep { (slope / inversion_weight(0.5 * (lo + hi))).max(0.0) } else { 0.0 });
    }
    if cells > 0 {
        edges.push(u_grid[0] + cells as f64 * width);
    }
    let atoms: Vec<(f64, f64)> = jumps.iter().map(|j| (j.location, j.mass)).collect();
    let g = CanonicalMeasure::new(atoms, edges, values)?;
    Ok(Recovery { g, jumps })
}

/// Settings for the full inversion pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionConfig {
    pub window: Window,
    pub u_max: f64,
    pub u_step: f64,
    pub recovery: RecoveryOptions,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { window: Window::default(), u_max: 5.0, u_step: 0.01, recovery: RecoveryOptions::default() }
    }
}

/// Everything produced by [`invert`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionReport {
    pub config: InversionConfig,
    pub taper: &'static str,
    pub k_samples: Vec<(f64, f64)>,
    pub jumps: Vec<DetectedJump>,
    pub recovered_g: CanonicalMeasure,
    pub recovered_gamma: f64,
    /// Largest `|log phi - log phi_recovered|` over grid points with `|t| <= 5`.
    pub reconstruction_error: f64,
}

/// `delta -> k_from_delta -> g_from_k`, then the drift from `log phi(1)`.
pub fn invert(cf: &CharacteristicFunctionGrid, config: &InversionConfig) -> Result<InversionReport> {
    if !(config.u_step > 0.0 && config.u_max > config.u_step) {
        return Err(Error::BadParameter("u grid needs 0 < u_step < u_max".into()));
    }
    let dg = delta_grid(cf)?;
    let m = (config.u_max / config.u_step).round() as i64;
    let u: Vec<f64> = (-m..=m).map(|i| i as f64 * config.u_step).collect();
    let k = k_from_delta(&dg, &u, &config.window)?;
    let rec = g_from_k_windowed(&u, &k, &config.window, cf.step(), &config.recovery)?;

    let partial = LevyKhintchinePair::new(0.0, rec.g.clone())?;
    let recovered_gamma = (cf.log_at(1.0)?.im - partial.log_cf(1.0).im) / 1.0;
    let law = LevyKhintchinePair::new(recovered_gamma, rec.g.clone())?;
    let reconstruction_error = cf
        .t()
        .iter()
        .zip(cf.log_values())
        .filter(|(t, _)| t.abs() <= 5.0)
        .map(|(&t, l)| (law.log_cf(t) - l).norm())
        .fold(0.0, f64::max);
    Ok(InversionReport {
        config: *config,
        taper: "raised-cosine",
        k_samples: u.into_iter().zip(k).collect(),
        jumps: rec.jumps,
        recovered_g: rec.g,
        recovered_gamma,
        reconstruction_error,
    })
}

/// Drift, Gaussian part and large-jump compound-Poisson part of a law.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationResult {
    pub epsilon: f64,
    pub lambda_eps: f64,
    pub jump_distribution: CanonicalMeasure,
    pub gaussian_mass: f64,
    pub drift: f64,
}

impl TruncationResult {
    /// `i drift t - gaussian_mass t^2/2 + lambda (psi(t) - 1)`.
    pub fn log_cf(&self, t: f64) -> Complex64 {
        let base = Complex64::new(-0.5 * self.gaussian_mass * t * t, self.drift * t);
        if self.lambda_eps == 0.0 {
            return base;
        }
        let psi = or_nan(self.jump_distribution.integrate(|u| Complex64::cis(t * u), &[]));
        base + self.lambda_eps * (psi - 1.0)
    }

    pub fn compound_poisson(&self) -> Option<CompoundPoissonSpec> {
        (self.lambda_eps > 0.0).then(|| CompoundPoissonSpec {
            rate: self.lambda_eps,
            jump: self.jump_distribution.clone(),
        })
    }
}

/// Keep the jumps with `|u| > epsilon`; discard the smaller ones.
pub fn truncate_cp(law: &LevyKhintchinePair, epsilon: f64) -> Result<TruncationResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::BadParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let outer = law
        .g
        .restrict(Interval::below(-epsilon))
        .merge(&law.g.restrict(Interval::above(epsilon)))?;
    let nu = outer.reweight(|u| (1.0 + u * u) / (u * u), &[])?;
    let lambda_eps = nu.total_mass();
    let compensator = nu.integrate_real(|u| u / (1.0 + u * u), &[])?;
    let jump_distribution = if lambda_eps > 0.0 { nu.scale(1.0 / lambda_eps) } else { CanonicalMeasure::empty() };
    // cancellation residue would put lattice laws slightly off their lattice
    let drift = law.gamma - compensator;
    let drift = if drift.abs() <= 4.0 * f64::EPSILON * (law.gamma.abs() + compensator.abs()) { 0.0 } else { drift };
    Ok(TruncationResult {
        epsilon,
        lambda_eps,
        jump_distribution,
        gaussian_mass: law.g.atom_mass_at(0.0),
        drift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeFinettiStep {
    pub truncation: TruncationResult,
    /// `max |phi_eps(t) - phi(t)|` over the reference grid.
    pub error: f64,
}

/// Truncations at decreasing `epsilons` with their characteristic-function
/// errors against `reference` on `t_grid`.
pub fn definetti_sequence_against<F>(
    law: &LevyKhintchinePair,
    epsilons: &[f64],
    t_grid: &[f64],
    reference: F,
) -> Result<Vec<DeFinettiStep>>
where
    F: Fn(f64) -> Complex64,
{
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParameter("epsilons must decrease strictly".into()));
    }
    let exact: Vec<Complex64> = t_grid.iter().map(|&t| reference(t)).collect();
    epsilons
        .iter()
        .map(|&eps| {
            let truncation = truncate_cp(law, eps)?;
            // log_cf(-t) is the conjugate of log_cf(t), so each |t| is evaluated once
            let mut cache: HashMap<u64, Complex64> = HashMap::new();
            let error = t_grid
                .iter()
                .zip(&exact)
                .map(|(&t, e)| {
                    let l = *cache.entry(t.abs().to_bits()).or_insert_with(|| truncation.log_cf(t.abs()));
                    let l = if t < 0.0 { l.conj() } else { l };
                    (l.exp() - e).norm()
                })
                .fold(0.0, f64::max);
            Ok(DeFinettiStep { truncation, error })
        })
        .collect()
}

/// [`definetti_sequence_against`] with the law's own characteristic function
/// as reference.
pub fn definetti_sequence(law: &LevyKhintchinePair, epsilons: &[f64], t_grid: &[f64]) -> Result<Vec<DeFinettiStep>> {
    definetti_sequence_against(law, epsilons, t_grid, |t| law.log_cf(t).exp())
}

/// Errors are non-increasing up to a relative slack.
pub fn is_non_increasing(steps: &[DeFinettiStep], slack: f64) -> bool {
    steps.windows(2).all(|w| w[1].error <= w[0].error * (1.0 + slack) + 1e-15)
}
