//! Sampling increments and paths of processes with stationary independent
//! increments, and the statistics used to check them.
//!
//! An increment of duration `d` is `drift d + Normal(0, g0 d)` plus a
//! compound-Poisson sum of jumps larger than `epsilon`; smaller jumps are
//! dropped. Random numbers come from ChaCha8 keyed by the seed, with one
//! stream per path and a disjoint block of `2^36` words per interval, so
//! every increment is reproducible on its own.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::Serialize;

use crate::canonical_forms::LevyKhintchinePair;
use crate::error::{Error, Result};
use crate::khinchin::{truncate_cp, TruncationResult};
use crate::measure::CanonicalMeasure;

const INTERVAL_SHIFT: u32 = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub law: LevyKhintchinePair,
    pub epsilon: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn new(law: LevyKhintchinePair, epsilon: f64, horizon: f64, seed: u64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::BadParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::BadParameter(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { law, epsilon, horizon, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Atom(f64),
    Cell(f64, f64),
}

/// Inverse-cdf sampler over the atoms and cells of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSampler {
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
}

impl JumpSampler {
    pub fn new(m: &CanonicalMeasure) -> Self {
        let mut entries: Vec<(f64, Piece, f64)> = m
            .atoms()
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| (a.location, Piece::Atom(a.location), a.mass))
            .chain(
                m.grid()
                    .cells()
                    .filter(|c| c.2 > 0.0)
                    .map(|(a, b, v)| (a, Piece::Cell(a, b), v * (b - a))),
            )
            .collect();
        entries.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut total = 0.0;
        let mut pieces = Vec::with_capacity(entries.len());
        let mut cumulative = Vec::with_capacity(entries.len());
        for (_, p, mass) in entries {
            total += mass;
            pieces.push(p);
            cumulative.push(total);
        }
        Self { pieces, cumulative }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("sampler has mass");
        let x = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x).min(self.pieces.len() - 1);
        match self.pieces[i] {
            Piece::Atom(loc) => loc,
            Piece::Cell(a, b) => a + rng.random::<f64>() * (b - a),
        }
    }
}

/// A [`ProcessSpec`] with its truncation and jump sampler prepared.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    spec: ProcessSpec,
    truncation: TruncationResult,
    sampler: JumpSampler,
}

impl Process {
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        let truncation = truncate_cp(&spec.law, spec.epsilon)?;
        let sampler = JumpSampler::new(&truncation.jump_distribution);
        Ok(Self { spec, truncation, sampler })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn truncation(&self) -> &TruncationResult {
        &self.truncation
    }

    /// Random stream for interval `interval` of path `path`.
    pub fn stream(&self, path: u64, interval: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(path);
        rng.set_word_pos(u128::from(interval) << INTERVAL_SHIFT);
        rng
    }

    /// Log-characteristic function of `X(duration)`: `duration` times the
    /// base exponent.
    pub fn log_cf(&self, t: f64, duration: f64) -> Complex64 {
        self.spec.law.log_cf(t) * duration
    }

    /// Log-characteristic function of the truncated increment that is
    /// actually sampled.
    pub fn sampled_log_cf(&self, t: f64, duration: f64) -> Complex64 {
        self.truncation.log_cf(t) * duration
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, duration: f64, rng: &mut R) -> f64 {
        let tr = &self.truncation;
        let mut x = tr.drift * duration;
        if tr.gaussian_mass > 0.0 {
            let normal = Normal::new(0.0, (tr.gaussian_mass * duration).sqrt()).expect("finite variance");
            x += normal.sample(rng);
        }
        let mean = tr.lambda_eps * duration;
        if mean > 0.0 && !self.sampler.is_empty() {
            let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
            for _ in 0..count {
                x += self.sampler.sample(rng);
            }
        }
        x
    }

    /// Values at `times` (starting at 0, strictly increasing, within the
    /// horizon) of path number `path`.
    pub fn sample_path(&self, times: &[f64], path: u64) -> Result<PathSample> {
        if times.first() != Some(&0.0)
            || times.windows(2).any(|w| !(w[1] > w[0]))
            || times.iter().any(|t| !t.is_finite())
            || *times.last().expect("non-empty") > self.spec.horizon * (1.0 + 1e-12)
        {
            return Err(Error::BadTimes);
        }
        let mut values = Vec::with_capacity(times.len());
        let mut x = 0.0;
        values.push(x);
        for (k, w) in times.windows(2).enumerate() {
            let mut rng = self.stream(path, k as u64);
            x += self.sample_increment(w[1] - w[0], &mut rng);
            values.push(x);
        }
        Ok(PathSample { times: times.to_vec(), values })
    }

    /// `count` independent increments of length `duration`, one per path.
    pub fn increments(&self, duration: f64, count: usize, first_path: u64) -> Vec<f64> {
        (0..count as u64)
            .map(|p| self.sample_increment(duration, &mut self.stream(first_path + p, 0)))
            .collect()
    }
}

/// Free-function form of [`Process::sample_increment`].
pub fn sample_increment<R: Rng + ?Sized>(process: &Process, duration: f64, stream: &mut R) -> f64 {
    process.sample_increment(duration, stream)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Write `path_id, time, value` rows with a header.
pub fn write_paths_csv<W: Write>(paths: &[PathSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "time", "value"]).map_err(Error::from)?;
    for (id, p) in paths.iter().enumerate() {
        for (t, v) in p.times.iter().zip(&p.values) {
            w.serialize((id, t, v)).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCF {
    pub t_grid: Vec<f64>,
    pub estimates: Vec<Complex64>,
    pub half_widths: Vec<f64>,
}

impl EmpiricalCF {
    /// Fraction of grid points where `|estimate - exact| <= half_width`.
    pub fn fraction_inside<F: Fn(f64) -> Complex64>(&self, exact: F) -> f64 {
        let inside = self
            .t_grid
            .iter()
            .zip(&self.estimates)
            .zip(&self.half_widths)
            .filter(|((t, e), hw)| (**e - exact(**t)).norm() <= **hw)
            .count();
        inside as f64 / self.t_grid.len().max(1) as f64
    }

    /// Largest `|estimate - exact|` over the grid.
    pub fn sup_gap<F: Fn(f64) -> Complex64>(&self, exact: F) -> f64 {
        self.t_grid
            .iter()
            .zip(&self.estimates)
            .map(|(t, e)| (e - exact(*t)).norm())
            .fold(0.0, f64::max)
    }

    /// Write `t, re, im, half_width` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im", "half_width"]).map_err(Error::from)?;
        for ((t, e), hw) in self.t_grid.iter().zip(&self.estimates).zip(&self.half_widths) {
            w.serialize((t, e.re, e.im, hw)).map_err(Error::from)?;
        }
        w.flush().map_err(Error::from)
    }
}

/// Sample mean of `e^{itX}` with a `3/sqrt(N)` envelope.
pub fn empirical_cf(samples: &[f64], t_grid: &[f64]) -> Result<EmpiricalCF> {
    if samples.is_empty() {
        return Err(Error::BadParameter("empirical characteristic function needs samples".into()));
    }
    let n = samples.len() as f64;
    let estimates = t_grid
        .iter()
        .map(|&t| {
            let (re, im) = samples.iter().fold((0.0, 0.0), |(c, s), &x| {
                let (sn, cs) = (t * x).sin_cos();
                (c + cs, s + sn)
            });
            let z = Complex64::new(re / n, im / n);
            if z.norm() > 1.0 {
                z / z.norm()
            } else {
                z
            }
        })
        .collect();
    Ok(EmpiricalCF {
        t_grid: t_grid.to_vec(),
        estimates,
        half_widths: vec![3.0 / n.sqrt(); t_grid.len()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Two-sample Kolmogorov–Smirnov test at the 1% level, using the asymptotic
/// critical value `1.628 sqrt((n+m)/(nm))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::BadParameter("both samples must be non-empty".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical = 1.628 * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsResult { statistic: d, critical, pass: d < critical })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingEntry {
    pub lambda: f64,
    /// `max |log phi_lambda(t) - lambda log phi(t)|` with `phi_lambda` from
    /// the rescaled canonical pair.
    pub identity_error: f64,
    pub fraction_inside: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub draws: usize,
    pub entries: Vec<ScalingEntry>,
    pub pass: bool,
}

/// Check `log phi(t, lambda) = lambda log phi(t, 1)` on the representation
/// and against empirical characteristic functions of sampled increments.
pub fn scaling_check(
    law: &LevyKhintchinePair,
    t_grid: &[f64],
    lambdas: &[f64],
    draws: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ScalingReport> {
    let horizon = lambdas.iter().copied().fold(1.0, f64::max);
    let process = Process::new(ProcessSpec::new(law.clone(), epsilon, horizon, seed)?)?;
    let mut entries = Vec::new();
    for (k, &lambda) in lambdas.iter().enumerate() {
        let scaled = law.scaled(lambda)?;
        let identity_error = t_grid
            .iter()
            .map(|&t| {
                let base = law.log_cf(t);
                (scaled.log_cf(t) - base * lambda).norm() / (1.0 + base.norm() * lambda)
            })
            .fold(0.0, f64::max);
        let samples = process.increments(lambda, draws, (k as u64) << 32);
        let ecf = empirical_cf(&samples, t_grid)?;
        let fraction_inside = ecf.fraction_inside(|t| process.sampled_log_cf(t, lambda).exp());
        let pass = identity_error <= 1e-12 && fraction_inside >= 0.99;
        entries.push(ScalingEntry { lambda, identity_error, fraction_inside, pass });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(ScalingReport { draws, entries, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangularReport {
    pub n: u32,
    pub draws: usize,
    pub ks: KsResult,
}

/// Compare `draws` values of `X(1)` with `draws` sums of `n` independent
/// copies of `X(1/n)` by a two-sample KS test.
pub fn triangular_array_check(
    law: &LevyKhintchinePair,
    n: u32,
    draws: usize,
    epsilon: f64,
    seed: u64,
) -> Result<TriangularReport> {
    if n == 0 || draws == 0 {
        return Err(Error::BadParameter("n and draws must be positive".into()));
    }
    let process = Process::new(ProcessSpec::new(law.clone(), epsilon, 1.0, seed)?)?;
    let direct = process.increments(1.0, draws, 0);
    let d = 1.0 / n as f64;
    let sums: Vec<f64> = (0..draws as u64)
        .map(|p| {
            (0..n as u64)
                .map(|k| process.sample_increment(d, &mut process.stream(draws as u64 + p, k)))
                .sum()
        })
        .collect();
    Ok(TriangularReport { n, draws, ks: ks_two_sample(&direct, &sums)? })
}
