//! Where a law (or a sampled characteristic function) comes from.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use infdiv::canonical_forms::catalog::Catalog;
use infdiv::canonical_forms::{Law, LevyKhintchinePair};
use infdiv::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct LawSource {
    /// Catalog law, e.g. `gaussian:0,1`, `poisson:1,1`, `cauchy:1`,
    /// `cpoisson:2,-1,0.5,1,0.5`.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Law JSON file, or a `convert` report containing one.
    #[arg(long)]
    pub law: Option<PathBuf>,
}

/// A loaded law, remembering its catalog entry when there is one so that
/// closed forms can serve as references.
pub struct Loaded {
    pub law: Law,
    pub catalog: Option<Catalog>,
}

impl Loaded {
    pub fn lk(&self) -> Result<LevyKhintchinePair> {
        self.law.to_lk()
    }

    /// Closed form when known, otherwise the law's own evaluator.
    pub fn reference_log_cf(&self, t: f64) -> Complex64 {
        match &self.catalog {
            Some(c) => c.exact_log_cf(t),
            None => self.law.log_cf(t),
        }
    }
}

impl LawSource {
    pub fn load(&self) -> Result<Loaded> {
        match (&self.catalog, &self.law) {
            (Some(name), _) => {
                let catalog: Catalog = name.parse()?;
                Ok(Loaded { law: Law::Lk(catalog.law()?), catalog: Some(catalog) })
            }
            (None, Some(path)) => Ok(Loaded { law: read_law(path)?, catalog: None }),
            (None, None) => Err(Error::BadParameter("one of --catalog or --law is required".into())),
        }
    }
}

pub fn read_law(path: &Path) -> Result<Law> {
    parse_law(&fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
}

/// A bare law object, or any object with the law under a `law` key.
pub fn parse_law(text: &str) -> Result<Law> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("law") => map.remove("law").expect("key present"),
        other => other,
    };
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Characteristic-function samples on a symmetric uniform grid, read from a
/// CSV file with columns `t, re, im`.
#[derive(Debug, Clone, Serialize)]
pub struct SampledCf {
    pub t_max: f64,
    pub points: usize,
    #[serde(skip)]
    values: Vec<Complex64>,
}

impl SampledCf {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut t = Vec::new();
        let mut values = Vec::new();
        for row in reader.deserialize::<(f64, f64, f64)>() {
            let (ti, re, im) = row.map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::from(e),
                _ => Error::Parse(e.to_string()),
            })?;
            t.push(ti);
            values.push(Complex64::new(re, im));
        }
        Self::new(&t, values)
    }

    pub fn new(t: &[f64], values: Vec<Complex64>) -> Result<Self> {
        let n = t.len();
        if n < 3 || n % 2 == 0 {
            return Err(Error::Parse("need an odd number (at least 3) of samples".into()));
        }
        let t_max = t[n - 1];
        let step = 2.0 * t_max / (n - 1) as f64;
        let uniform = t
            .iter()
            .enumerate()
            .all(|(i, &ti)| (ti - (-t_max + i as f64 * step)).abs() <= 1e-9 * t_max.max(1.0));
        if !(t_max > 0.0) || !uniform {
            return Err(Error::Parse("t must be a symmetric uniform grid".into()));
        }
        Ok(Self { t_max, points: n, values })
    }

    /// Sample nearest to `t`.
    pub fn at(&self, t: f64) -> Complex64 {
        let step = 2.0 * self.t_max / (self.points - 1) as f64;
        let i = ((t + self.t_max) / step).round().clamp(0.0, (self.points - 1) as f64) as usize;
        self.values[i]
    }
}
