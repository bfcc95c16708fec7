//! Numerical toolkit for infinitely divisible laws on the real line.
//!
//! - [`measure`]: atoms plus gridded densities, integration and reweighting.
//! - [`canonical_forms`]: the Lévy–Khintchine, Kolmogorov and Lévy
//!   parameterizations, conversions and a small catalog of laws.
//! - [`divisibility`]: characteristic-function grids, continuous logarithms,
//!   n-th roots and finite positive-definiteness certificates.
//! - [`khinchin`]: the `G_h` construction, tail bounds, limit extraction,
//!   inversion of the canonical measure and compound-Poisson truncation.
//! - [`simulate`]: sampling of increments and paths with keyed random streams,
//!   plus the statistical checks used to validate them.

pub mod canonical_forms;
pub mod divisibility;
pub mod error;
pub mod kernel;
pub mod khinchin;
pub mod measure;
pub mod quadrature;
pub mod simulate;

pub use error::{Error, Result};
pub use measure::{Atom, CanonicalMeasure, DensityGrid, Interval};
