//! Characteristic functions on symmetric grids, their continuous logarithms,
//! convolution roots and finite positive-definiteness certificates.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// `|phi| <` this at a local minimum of the modulus counts as a zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// A chord between neighbouring values passing this close to the origin,
/// relative to the larger endpoint modulus, counts as a zero.
pub const CHORD_THRESHOLD: f64 = 1e-9;
const LAGRANGE_POINTS: usize = 6;

/// Characteristic-function samples on a uniform grid symmetric about 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFunctionGrid {
    t: Vec<f64>,
    values: Vec<Complex64>,
    log_values: Vec<Complex64>,
}

fn check_grid_shape(t_max: f64, points: usize) -> Result<()> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::BadParameter(format!("t_max must be positive, got {t_max}")));
    }
    if points < 3 || points % 2 == 0 {
        return Err(Error::BadParameter(format!("points must be odd and >= 3, got {points}")));
    }
    Ok(())
}

fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    let half = (points / 2) as f64;
    let c = points / 2;
    (0..points)
        .map(|i| {
            if i == c {
                0.0
            } else {
                t_max * (i as f64 - half) / half
            }
        })
        .collect()
}

/// Parameter in (0, 1) where the chord `z0 -> z1` passes through the origin,
/// if it passes within the relative chord threshold.
fn chord_zero(z0: Complex64, z1: Complex64) -> Option<f64> {
    let d = z1 - z0;
    let dd = d.norm_sqr();
    if dd == 0.0 {
        return None;
    }
    let s = -(z0.re * d.re + z0.im * d.im) / dd;
    if !(0.0..=1.0).contains(&s) {
        return None;
    }
    let closest = z0 + d * s;
    (closest.norm() <= CHORD_THRESHOLD * z0.norm().max(z1.norm())).then_some(s)
}

impl CharacteristicFunctionGrid {
    /// Sample `evaluator` on `points` uniform points over `[-t_max, t_max]`
    /// and unwrap its logarithm walking outward from `t = 0`.
    pub fn build<F>(evaluator: F, t_max: f64, points: usize) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        check_grid_shape(t_max, points)?;
        let t = uniform_grid(t_max, points);
        let values: Vec<Complex64> = t.iter().map(|&x| evaluator(x)).collect();
        let c = points / 2;
        if (values[c] - 1.0).norm() > 1e-9 {
            return Err(Error::BadParameter(format!(
                "characteristic function at 0 is {}, expected 1",
                values[c]
            )));
        }
        detect_zero(&t, &values)?;

        let mut log_values = vec![Complex64::new(0.0, 0.0); points];
        let mut walk = |range: &mut dyn Iterator<Item = usize>, step: isize| {
            for i in range {
                let prev = log_values[(i as isize - step) as usize];
                let raw = values[i].ln();
                let k = ((prev.im - raw.im) / TAU).round();
                log_values[i] = Complex64::new(raw.re, raw.im + k * TAU);
            }
        };
        walk(&mut (c + 1..points), 1);
        walk(&mut (0..c).rev(), -1);
        Ok(Self { t, values, log_values })
    }

    /// Build from a known continuous logarithm; no unwrapping is needed.
    pub fn from_log<F>(log_cf: F, t_max: f64, points: usize) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        check_grid_shape(t_max, points)?;
        let t = uniform_grid(t_max, points);
        let mut log_values: Vec<Complex64> = t.iter().map(|&x| log_cf(x)).collect();
        let c = points / 2;
        if log_values[c].norm() > 1e-9 {
            return Err(Error::BadParameter("log characteristic function at 0 must vanish".into()));
        }
        log_values[c] = Complex64::new(0.0, 0.0);
        if log_values.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
            return Err(Error::BadParameter("log characteristic function is not finite".into()));
        }
        let values = log_values.iter().map(|l| l.exp()).collect();
        Ok(Self { t, values, log_values })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn log_values(&self) -> &[Complex64] {
        &self.log_values
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("grid has at least three points")
    }

    pub fn step(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let span = self.t_max();
        if !(t.abs() <= span * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, span });
        }
        let x = ((t + span) / self.step()).clamp(0.0, (self.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.len() - 2);
        Ok((i, x - i as f64))
    }

    /// Logarithm at `t` by linear interpolation between grid points.
    pub fn log_at_linear(&self, t: f64) -> Result<Complex64> {
        let (i, s) = self.locate(t)?;
        if s == 0.0 {
            return Ok(self.log_values[i]);
        }
        Ok(self.log_values[i] * (1.0 - s) + self.log_values[i + 1] * s)
    }

    /// Logarithm at `t` by six-point Lagrange interpolation.
    pub fn log_at(&self, t: f64) -> Result<Complex64> {
        let (i, s) = self.locate(t)?;
        if s == 0.0 {
            return Ok(self.log_values[i]);
        }
        Ok(self.lagrange(i, s))
    }

    fn lagrange(&self, i: usize, s: f64) -> Complex64 {
        let n = self.len();
        let start = (i as isize - (LAGRANGE_POINTS as isize / 2 - 1))
            .clamp(0, (n - LAGRANGE_POINTS.min(n)) as isize) as usize;
        let count = LAGRANGE_POINTS.min(n);
        let x = i as f64 + s;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in start..start + count {
            let mut w = 1.0;
            for k in start..start + count {
                if k != j {
                    w *= (x - k as f64) / (j as f64 - k as f64);
                }
            }
            acc += self.log_values[j] * w;
        }
        acc
    }

    /// Characteristic function at `t` from the linearly interpolated logarithm.
    pub fn value_at(&self, t: f64) -> Result<Complex64> {
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.log_at_linear(t)?.exp())
    }

    /// `∫_a^b log phi` using the six-point interpolant on each grid cell.
    pub fn integrate_log(&self, a: f64, b: f64) -> Result<Complex64> {
        if b < a {
            return Ok(-self.integrate_log(b, a)?);
        }
        let (ia, sa) = self.locate(a)?;
        let (ib, sb) = self.locate(b)?;
        let rule = Rule::new(4);
        let h = self.step();
        let cell = |i: usize, s0: f64, s1: f64| -> Complex64 {
            let mid = 0.5 * (s0 + s1);
            let half = 0.5 * (s1 - s0);
            rule.pairs()
                .iter()
                .map(|&(x, w)| self.lagrange(i, mid + half * x) * w)
                .sum::<Complex64>()
                * (half * h)
        };
        if ia == ib {
            return Ok(cell(ia, sa, sb));
        }
        let mut total = cell(ia, sa, 1.0);
        for i in ia + 1..ib {
            total += cell(i, 0.0, 1.0);
        }
        if sb > 0.0 {
            total += cell(ib, 0.0, sb);
        }
        Ok(total)
    }

    /// Prefix integrals `F(t_k) = ∫_{-t_max}^{t_k} log phi` at every grid point.
    pub fn log_prefix_integrals(&self) -> Vec<Complex64> {
        let rule = Rule::new(4);
        let h = self.step();
        let mut out = Vec::with_capacity(self.len());
        let mut acc = Complex64::new(0.0, 0.0);
        out.push(acc);
        for i in 0..self.len() - 1 {
            let cell: Complex64 = rule
                .pairs()
                .iter()
                .map(|&(x, w)| self.lagrange(i, 0.5 + 0.5 * x) * w)
                .sum();
            acc += cell * (0.5 * h);
            out.push(acc);
        }
        out
    }

    /// Write columns `t, re, im, log_re, log_im` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im", "log_re", "log_im"]).map_err(Error::from)?;
        for ((t, v), l) in self.t.iter().zip(&self.values).zip(&self.log_values) {
            w.serialize((t, v.re, v.im, l.re, l.im)).map_err(Error::from)?;
        }
        w.flush().map_err(Error::from)?;
        Ok(())
    }
}

/// Reports the zero closest to `t = 0`.
fn detect_zero(t: &[f64], values: &[Complex64]) -> Result<()> {
    let n = values.len();
    let mut found: Option<f64> = None;
    let mut keep = |z: f64| {
        if found.is_none_or(|f| z.abs() < f.abs()) {
            found = Some(z);
        }
    };
    for (i, v) in values.iter().enumerate() {
        let m = v.norm();
        if !m.is_finite() || m < f64::MIN_POSITIVE {
            keep(t[i]);
        } else if m < ZERO_THRESHOLD && i > 0 && i + 1 < n && m <= values[i - 1].norm() && m <= values[i + 1].norm() {
            keep(t[i]);
        }
    }
    for i in 0..n - 1 {
        if let Some(s) = chord_zero(values[i], values[i + 1]) {
            keep(t[i] + s * (t[i + 1] - t[i]));
        }
    }
    match found {
        Some(t) => Err(Error::ZeroCrossing { t }),
        None => Ok(()),
    }
}

/// Free-function form of [`CharacteristicFunctionGrid::build`].
pub fn build_cf_grid<F>(evaluator: F, t_max: f64, points: usize) -> Result<CharacteristicFunctionGrid>
where
    F: Fn(f64) -> Complex64,
{
    CharacteristicFunctionGrid::build(evaluator, t_max, points)
}

/// Principal n-th root along the unwrapped branch.
pub fn nth_root(cf: &CharacteristicFunctionGrid, n: u32) -> Result<CharacteristicFunctionGrid> {
    if n == 0 {
        return Err(Error::BadParameter("root order must be positive".into()));
    }
    if n == 1 {
        return Ok(cf.clone());
    }
    let inv = 1.0 / n as f64;
    let log_values: Vec<Complex64> = cf.log_values.iter().map(|l| l * inv).collect();
    let values = log_values.iter().map(|l| l.exp()).collect();
    Ok(CharacteristicFunctionGrid { t: cf.t.clone(), values, log_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdResult {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Minimum eigenvalue of the Gram matrix `H[j,k] = phi(t_j - t_k)`.
pub fn psd_check(cf: &CharacteristicFunctionGrid, probes: &[f64], tolerance: f64) -> Result<PsdResult> {
    let span = cf.t_max();
    let n = probes.len();
    for j in 0..n {
        for k in 0..j {
            let d = (probes[j] - probes[k]).abs();
            if d > span * (1.0 + 1e-12) {
                return Err(Error::ProbeOutOfRange { difference: d, span });
            }
            if d == 0.0 {
                return Err(Error::BadParameter("probe points must be distinct".into()));
            }
        }
    }
    if n == 0 {
        return Ok(PsdResult { is_psd: true, min_eigenvalue: 0.0 });
    }
    let mut h = DMatrix::<Complex64>::from_element(n, n, Complex64::new(1.0, 0.0));
    for j in 0..n {
        for k in 0..j {
            let v = cf.value_at(probes[j] - probes[k])?;
            h[(j, k)] = v;
            h[(k, j)] = v.conj();
        }
    }
    let min_eigenvalue = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(PsdResult { is_psd: min_eigenvalue >= -tolerance, min_eigenvalue })
}

/// Probe sets `{0, ±h, ±2h, ±3h}` for `h` in `{0.5, 1, 2}`.
pub fn default_probe_sets() -> Vec<Vec<f64>> {
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&h| (-3..=3).map(|k| k as f64 * h).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Zero { t: f64 },
    NotPositiveDefinite { n: u32, probes: Vec<f64>, min_eigenvalue: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCheck {
    pub n: u32,
    pub probes: Vec<f64>,
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

/// Outcome of [`verify_infinitely_divisible`]. A pass is evidence from a
/// finite set of checks, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityReport {
    pub pass: bool,
    pub witness: Option<Witness>,
    pub checks: Vec<RootCheck>,
    /// Probe sets whose differences do not fit on the grid.
    pub skipped: Vec<Vec<f64>>,
}

/// Check every requested root on every probe set that fits on the grid.
pub fn verify_grid(
    cf: &CharacteristicFunctionGrid,
    roots: &[u32],
    probe_sets: &[Vec<f64>],
    tolerance: f64,
) -> Result<DivisibilityReport> {
    let mut report = DivisibilityReport { pass: true, witness: None, checks: Vec::new(), skipped: Vec::new() };
    let (usable, skipped): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) = probe_sets.iter().partition(|p| {
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        p.is_empty() || hi - lo <= cf.t_max() * (1.0 + 1e-12)
    });
    report.skipped = skipped.into_iter().cloned().collect();
    for &n in roots {
        let root = nth_root(cf, n)?;
        for probes in &usable {
            let r = psd_check(&root, probes, tolerance)?;
            report.checks.push(RootCheck {
                n,
                probes: probes.to_vec(),
                min_eigenvalue: r.min_eigenvalue,
                is_psd: r.is_psd,
            });
            if !r.is_psd && report.witness.is_none() {
                report.pass = false;
                report.witness = Some(Witness::NotPositiveDefinite {
                    n,
                    probes: probes.to_vec(),
                    min_eigenvalue: r.min_eigenvalue,
                });
            }
        }
    }
    Ok(report)
}

/// Build the grid from `evaluator` and run [`verify_grid`]. A zero of the
/// characteristic function is reported as a failing witness, not an error.
pub fn verify_infinitely_divisible<F>(
    evaluator: F,
    t_max: f64,
    points: usize,
    roots: &[u32],
    probe_sets: &[Vec<f64>],
    tolerance: f64,
) -> Result<DivisibilityReport>
where
    F: Fn(f64) -> Complex64,
{
    match CharacteristicFunctionGrid::build(evaluator, t_max, points) {
        Ok(cf) => verify_grid(&cf, roots, probe_sets, tolerance),
        Err(Error::ZeroCrossing { t }) => Ok(DivisibilityReport {
            pass: false,
            witness: Some(Witness::Zero { t }),
            checks: Vec::new(),
            skipped: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// One row of a triangular array: `n` i.i.d. components whose sum has the
/// parent characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularArrayRow {
    pub n: u32,
    pub component_cf: CharacteristicFunctionGrid,
}

impl TriangularArrayRow {
    /// Largest deviation of `component^n` from the parent values.
    pub fn reproduction_error(&self, parent: &CharacteristicFunctionGrid) -> f64 {
        let n = self.n as f64;
        self.component_cf
            .log_values
            .iter()
            .zip(&parent.values)
            .map(|(l, v)| ((l * n).exp() - v).norm())
            .fold(0.0, f64::max)
    }
}

pub fn triangular_row(cf: &CharacteristicFunctionGrid, n: u32) -> Result<TriangularArrayRow> {
    Ok(TriangularArrayRow { n, component_cf: nth_root(cf, n)? })
}

/// Largest phase step between neighbouring grid points.
pub fn max_phase_increment(cf: &CharacteristicFunctionGrid) -> f64 {
    cf.log_values
        .windows(2)
        .map(|w| (w[1].im - w[0].im).abs())
        .fold(0.0, f64::max)
}
