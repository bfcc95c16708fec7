//! Bounded non-decreasing weights on the real line.
//!
//! A [`CanonicalMeasure`] is a finite list of atoms plus a piecewise-constant
//! density on a finite grid. Every weight function the crate manipulates
//! (the Lévy–Khintchine `G`, Kolmogorov's `K`, the Lévy tail measures, the
//! `G_h` family and jump intensities) lives in this one type.
//!
//! Conventions:
//! - the cumulative function is right-continuous: `cdf(u)` is the mass of
//!   `(-inf, u]`;
//! - atoms are kept sorted by location, locations are pairwise distinct;
//! - density cells are integrated with a fixed-order Gauss–Legendre rule;
//! - a measure that was truncated from an infinite-support law records the
//!   dropped mass in [`CanonicalMeasure::tail_mass`].

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// Locations closer than this are treated as the same atom.
pub const ATOM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Piecewise-constant density: `values[i]` on `[edges[i], edges[i + 1])`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DensityGrid {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.values)
            .map(|(e, &v)| (e[0], e[1], v))
    }

    fn validate(&self) -> Result<()> {
        if self.edges.is_empty() && self.values.is_empty() {
            return Ok(());
        }
        if self.edges.len() != self.values.len() + 1 {
            return Err(Error::InvalidMeasure(format!(
                "grid has {} edges for {} values",
                self.edges.len(),
                self.values.len()
            )));
        }
        if self.edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidMeasure("grid edge is not finite".into()));
        }
        if self.edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure("grid edges must increase strictly".into()));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure(
                "density values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// An interval of the real line with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// `(-inf, hi)`
    pub fn below(hi: f64) -> Self {
        Self::open(f64::NEG_INFINITY, hi)
    }

    /// `(lo, +inf)`
    pub fn above(lo: f64) -> Self {
        Self::open(lo, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let hi_ok = if self.hi_closed { x <= self.hi } else { x < self.hi };
        lo_ok && hi_ok
    }
}

/// Atoms plus a gridded density. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct CanonicalMeasure {
    atoms: Vec<Atom>,
    grid: DensityGrid,
    tail_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    grid: DensityGrid,
    #[serde(default, skip_serializing_if = "is_zero")]
    tail_mass: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<RawMeasure> for CanonicalMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let m = CanonicalMeasure::new(raw.atoms, raw.grid.edges, raw.grid.values)?;
        if !raw.tail_mass.is_finite() || raw.tail_mass < 0.0 {
            return Err(Error::InvalidMeasure("tail_mass must be finite and non-negative".into()));
        }
        Ok(m.with_tail_mass(raw.tail_mass))
    }
}

impl From<CanonicalMeasure> for RawMeasure {
    fn from(m: CanonicalMeasure) -> Self {
        RawMeasure {
            atoms: m.atoms.iter().map(|a| (a.location, a.mass)).collect(),
            grid: m.grid,
            tail_mass: m.tail_mass,
        }
    }
}

impl CanonicalMeasure {
    /// The zero measure.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build and validate a measure. Atoms may be given in any order.
    pub fn new(atoms: Vec<(f64, f64)>, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(location, mass)| Atom { location, mass })
            .collect();
        for a in &atoms {
            if !a.location.is_finite() || !a.mass.is_finite() || a.mass < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom ({}, {}) must have finite location and finite non-negative mass",
                    a.location, a.mass
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap_or(Ordering::Equal));
        if atoms.windows(2).any(|w| w[1].location <= w[0].location) {
            return Err(Error::InvalidMeasure("atom locations must be distinct".into()));
        }
        let grid = DensityGrid { edges, values };
        grid.validate()?;
        let m = Self { atoms, grid, tail_mass: 0.0 };
        if !m.total_mass().is_finite() {
            return Err(Error::InvalidMeasure("total mass is not finite".into()));
        }
        Ok(m)
    }

    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(atoms.to_vec(), Vec::new(), Vec::new())
    }

    /// A single atom.
    pub fn atom(location: f64, mass: f64) -> Result<Self> {
        Self::from_atoms(&[(location, mass)])
    }

    /// A density with no atoms.
    pub fn density(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), edges, values)
    }

    /// Record mass dropped outside the grid by truncation.
    pub fn with_tail_mass(mut self, tail_mass: f64) -> Self {
        self.tail_mass = tail_mass;
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn grid(&self) -> &DensityGrid {
        &self.grid
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0) && self.grid.values.iter().all(|v| *v == 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let dens: f64 = self.grid.cells().map(|(a, b, v)| v * (b - a)).sum();
        atoms + dens
    }

    /// Mass of the atom at `location`, or 0.
    pub fn atom_mass_at(&self, location: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| (a.location - location).abs() <= ATOM_TOLERANCE)
            .map_or(0.0, |a| a.mass)
    }

    /// Mass of `(-inf, u]`.
    pub fn cdf(&self, u: f64) -> f64 {
        let n = self.atoms.partition_point(|a| a.location <= u);
        let atoms: f64 = self.atoms[..n].iter().map(|a| a.mass).sum();
        let mut dens = 0.0;
        for (a, b, v) in self.grid.cells() {
            if a >= u {
                break;
            }
            dens += v * (b.min(u) - a);
        }
        atoms + dens
    }

    /// Mass carried by an interval.
    pub fn mass_in(&self, iv: Interval) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| iv.contains(a.location))
            .map(|a| a.mass)
            .sum();
        let dens: f64 = self
            .grid
            .cells()
            .map(|(a, b, v)| {
                let lo = a.max(iv.lo);
                let hi = b.min(iv.hi);
                if hi > lo {
                    v * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum();
        atoms + dens
    }

    /// Integrate `f` with the default rule. See [`CanonicalMeasure::integrate_with`].
    pub fn integrate<F>(&self, f: F, atom_values: &[(f64, Complex64)]) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        self.integrate_with(&Rule::default(), f, atom_values)
    }

    /// `sum(mass * f(loc))` over atoms plus per-cell Gauss–Legendre quadrature
    /// of `f` against the density.
    ///
    /// `f` signals a removable singularity by returning a non-finite value; an
    /// atom sitting on such a point must appear in `atom_values`, which takes
    /// precedence over `f` at matching locations.
    pub fn integrate_with<F>(
        &self,
        rule: &Rule,
        f: F,
        atom_values: &[(f64, Complex64)],
    ) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            if a.mass == 0.0 {
                continue;
            }
            let value = match lookup(atom_values, a.location) {
                Some(v) => v,
                None => {
                    let v = f(a.location);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::MissingAtomValue { location: a.location });
                    }
                    v
                }
            };
            total += value * a.mass;
        }
        let pairs = rule.pairs();
        for (a, b, v) in self.grid.cells() {
            if v == 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let mut cell = Complex64::new(0.0, 0.0);
            for &(x, w) in pairs {
                let u = mid + half * x;
                let fu = f(u);
                if !(fu.re.is_finite() && fu.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand { location: u });
                }
                cell += fu * w;
            }
            total += cell * (v * half);
        }
        Ok(total)
    }

    /// Real-valued convenience wrapper around [`CanonicalMeasure::integrate`].
    pub fn integrate_real<F>(&self, f: F, atom_values: &[(f64, f64)]) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let overrides: Vec<(f64, Complex64)> = atom_values
            .iter()
            .map(|&(l, v)| (l, Complex64::new(v, 0.0)))
            .collect();
        Ok(self.integrate(|u| Complex64::new(f(u), 0.0), &overrides)?.re)
    }

    /// Multiply atoms by `w(location)` (or the matching `atom_weights` entry)
    /// and density cells by `w` at the cell midpoint. Zero-mass atoms are
    /// dropped from the result.
    pub fn reweight<W>(&self, w: W, atom_weights: &[(f64, f64)]) -> Result<Self>
    where
        W: Fn(f64) -> f64,
    {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if a.mass == 0.0 {
                continue;
            }
            let weight = lookup(atom_weights, a.location).unwrap_or_else(|| w(a.location));
            check_weight(weight, a.location, a.location)?;
            let mass = a.mass * weight;
            if !mass.is_finite() {
                return Err(Error::InfiniteWeight { lo: a.location, hi: a.location });
            }
            if mass > 0.0 {
                atoms.push(Atom { location: a.location, mass });
            }
        }
        let mut values = Vec::with_capacity(self.grid.values.len());
        for (a, b, v) in self.grid.cells() {
            if v == 0.0 {
                values.push(0.0);
                continue;
            }
            let weight = w(0.5 * (a + b));
            check_weight(weight, a, b)?;
            let value = v * weight;
            if !value.is_finite() || !(value * (b - a)).is_finite() {
                return Err(Error::InfiniteWeight { lo: a, hi: b });
            }
            values.push(value);
        }
        Ok(Self {
            atoms,
            grid: DensityGrid { edges: self.grid.edges.clone(), values },
            tail_mass: self.tail_mass,
        })
    }

    /// Multiply every mass by `c >= 0`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { location: a.location, mass: a.mass * c })
                .filter(|a| a.mass > 0.0)
                .collect(),
            grid: DensityGrid {
                edges: self.grid.edges.clone(),
                values: self.grid.values.iter().map(|v| v * c).collect(),
            },
            tail_mass: self.tail_mass * c,
        }
    }

    /// The part of the measure carried by `iv`. Density cells are clipped at
    /// the interval ends; cells outside are removed.
    pub fn restrict(&self, iv: Interval) -> Self {
        let atoms = self
            .atoms
            .iter()
            .copied()
            .filter(|a| iv.contains(a.location))
            .collect();
        let mut edges: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (a, b, v) in self.grid.cells() {
            let lo = a.max(iv.lo);
            let hi = b.min(iv.hi);
            if hi <= lo {
                continue;
            }
            match edges.last() {
                Some(&last) if last == lo => {}
                Some(_) => {
                    // non-contiguous piece; fill with a zero cell
                    edges.push(lo);
                    values.push(0.0);
                }
                None => edges.push(lo),
            }
            edges.push(hi);
            values.push(v);
        }
        // zero-valued filler cells only appear between clipped pieces, which a
        // single interval never produces; drop leading/trailing zeros anyway
        Self {
            atoms,
            grid: trim_zero_ends(DensityGrid { edges, values }),
            tail_mass: 0.0,
        }
    }

    /// The measure with any atom at `location` removed.
    pub fn without_atom(&self, location: f64) -> Self {
        let mut m = self.clone();
        m.atoms.retain(|a| (a.location - location).abs() > ATOM_TOLERANCE);
        m
    }

    /// Sum of two measures whose density grids do not overlap. Atoms at the
    /// same location are merged.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for a in self.atoms.iter().chain(other.atoms.iter()) {
            match atoms
                .iter_mut()
                .find(|(l, _)| (*l - a.location).abs() <= ATOM_TOLERANCE)
            {
                Some(entry) => entry.1 += a.mass,
                None => atoms.push((a.location, a.mass)),
            }
        }
        let (first, second) = match (self.grid.is_empty(), other.grid.is_empty()) {
            (true, _) => (&other.grid, &self.grid),
            (_, true) => (&self.grid, &other.grid),
            _ if self.grid.edges[0] <= other.grid.edges[0] => (&self.grid, &other.grid),
            _ => (&other.grid, &self.grid),
        };
        let mut grid = first.clone();
        if !second.is_empty() {
            let last = *grid.edges.last().expect("non-empty grid");
            let start = second.edges[0];
            if start < last {
                return Err(Error::InvalidMeasure("cannot merge overlapping density grids".into()));
            }
            if start > last {
                grid.edges.push(start);
                grid.values.push(0.0);
            }
            grid.edges.extend_from_slice(&second.edges[1..]);
            grid.values.extend_from_slice(&second.values);
        }
        let mut m = Self::new(atoms, grid.edges, grid.values)?;
        m.tail_mass = self.tail_mass + other.tail_mass;
        Ok(m)
    }

    /// Mirror image `u -> -u`.
    pub fn reflect(&self) -> Self {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { location: -a.location, mass: a.mass })
            .collect();
        atoms.reverse();
        let edges = self.grid.edges.iter().rev().map(|e| -e).collect();
        let values = self.grid.values.iter().rev().copied().collect();
        Self { atoms, grid: DensityGrid { edges, values }, tail_mass: self.tail_mass }
    }

    /// Smallest and largest point of the support, if any.
    pub fn support_bounds(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in self.atoms.iter().filter(|a| a.mass > 0.0) {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        for (a, b, v) in self.grid.cells() {
            if v > 0.0 {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

fn lookup<T: Copy>(table: &[(f64, T)], location: f64) -> Option<T> {
    table
        .iter()
        .find(|(l, _)| (l - location).abs() <= ATOM_TOLERANCE)
        .map(|&(_, v)| v)
}

fn check_weight(weight: f64, lo: f64, hi: f64) -> Result<()> {
    if weight.is_nan() || weight.is_infinite() {
        return Err(Error::InfiniteWeight { lo, hi });
    }
    if weight < 0.0 {
        return Err(Error::BadParameter(format!("negative weight {weight} on [{lo}, {hi}]")));
    }
    Ok(())
}

fn trim_zero_ends(mut grid: DensityGrid) -> DensityGrid {
    while grid.values.first() == Some(&0.0) {
        grid.values.remove(0);
        grid.edges.remove(0);
    }
    while grid.values.last() == Some(&0.0) {
        grid.values.pop();
        grid.edges.pop();
    }
    if grid.values.is_empty() {
        grid.edges.clear();
    }
    grid
}
