//! The three canonical parameterizations of an infinitely divisible law.
//!
//! | form | parameters | log-characteristic function |
//! |------|------------|-----------------------------|
//! | Lévy–Khintchine | `gamma`, `G` | `i gamma t + ∫ (e^{itu} - 1 - itu/(1+u^2)) (1+u^2)/u^2 dG(u)` |
//! | Kolmogorov | `gamma_k`, `K` | `i gamma_k t + ∫ (e^{itu} - 1 - itu)/u^2 dK(u)` |
//! | Lévy | `gamma`, `sigma2`, `M`, `N` | `i gamma t - sigma2 t^2/2 + ∫ (e^{itu} - 1 - itu/(1+u^2)) d(M + N)` |
//!
//! In the first two forms the integrand takes the value `-t^2/2` at `u = 0`.
//! The Lévy tail functions are stored as measures; [`LevyTriplet::m_function`]
//! and [`LevyTriplet::n_function`] expose the tail-normalized view.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kolmogorov_integrand, levy_integrand, lk_integrand, or_nan};
use crate::measure::{CanonicalMeasure, Interval};
use crate::quadrature::Rule;

/// Reweighted mass above which a Kolmogorov conversion is refused.
pub const VARIANCE_BOUND: f64 = 1e12;

/// Tolerance on the total mass of a jump distribution.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn lk_weight_inverse(u: f64) -> f64 {
    u * u / (1.0 + u * u)
}

fn lk_weight(u: f64) -> f64 {
    (1.0 + u * u) / (u * u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyKhintchinePair {
    pub gamma: f64,
    pub g: CanonicalMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovPair {
    pub gamma_k: f64,
    pub k: CanonicalMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub gamma: f64,
    pub sigma2: f64,
    pub m: CanonicalMeasure,
    pub n: CanonicalMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSpec {
    pub rate: f64,
    pub jump: CanonicalMeasure,
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("{name} must be finite, got {x}")))
    }
}

impl LevyKhintchinePair {
    pub fn new(gamma: f64, g: CanonicalMeasure) -> Result<Self> {
        check_finite("gamma", gamma)?;
        Ok(Self { gamma, g })
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.log_cf_with(&Rule::default(), t)
    }

    pub fn log_cf_with(&self, rule: &Rule, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let at_zero = Complex64::new(-0.5 * t * t, 0.0);
        let f = |u: f64| if u == 0.0 { at_zero } else { lk_integrand(t, u) };
        let integral = or_nan(self.g.integrate_with(rule, f, &[(0.0, at_zero)]));
        I * (self.gamma * t) + integral
    }

    /// Law of `X(lambda)` when this pair describes `X(1)`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::BadParameter(format!("scale must be positive, got {lambda}")));
        }
        Ok(Self { gamma: self.gamma * lambda, g: self.g.scale(lambda) })
    }
}

impl KolmogorovPair {
    pub fn new(gamma_k: f64, k: CanonicalMeasure) -> Result<Self> {
        check_finite("gamma", gamma_k)?;
        Ok(Self { gamma_k, k })
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.log_cf_with(&Rule::default(), t)
    }

    pub fn log_cf_with(&self, rule: &Rule, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let at_zero = Complex64::new(-0.5 * t * t, 0.0);
        let f = |u: f64| if u == 0.0 { at_zero } else { kolmogorov_integrand(t, u) };
        let integral = or_nan(self.k.integrate_with(rule, f, &[(0.0, at_zero)]));
        I * (self.gamma_k * t) + integral
    }
}

impl LevyTriplet {
    pub fn new(gamma: f64, sigma2: f64, m: CanonicalMeasure, n: CanonicalMeasure) -> Result<Self> {
        check_finite("gamma", gamma)?;
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::BadParameter(format!("sigma2 must be finite and >= 0, got {sigma2}")));
        }
        if let Some((_, hi)) = m.support_bounds() {
            if hi > 0.0 || m.atom_mass_at(0.0) > 0.0 {
                return Err(Error::InvalidMeasure("M must live on (-inf, 0)".into()));
            }
        }
        if let Some((lo, _)) = n.support_bounds() {
            if lo < 0.0 || n.atom_mass_at(0.0) > 0.0 {
                return Err(Error::InvalidMeasure("N must live on (0, +inf)".into()));
            }
        }
        Ok(Self { gamma, sigma2, m, n })
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.log_cf_with(&Rule::default(), t)
    }

    pub fn log_cf_with(&self, rule: &Rule, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let f = |u: f64| levy_integrand(t, u);
        let jumps = or_nan(self.m.integrate_with(rule, f, &[])) + or_nan(self.n.integrate_with(rule, f, &[]));
        Complex64::new(-0.5 * self.sigma2 * t * t, self.gamma * t) + jumps
    }

    /// `M(u) = -mass((u, 0))` for `u < 0`.
    pub fn m_function(&self, u: f64) -> f64 {
        if u >= 0.0 {
            return 0.0;
        }
        -self.m.mass_in(Interval::open(u, 0.0))
    }

    /// `N(u) = -mass((u, +inf))` for `u > 0`.
    pub fn n_function(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        -self.n.mass_in(Interval::above(u))
    }
}

impl CompoundPoissonSpec {
    pub fn new(rate: f64, jump: CanonicalMeasure) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::BadParameter(format!("rate must be positive, got {rate}")));
        }
        let mass = jump.total_mass();
        if (mass - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::BadParameter(format!("jump distribution has mass {mass}, expected 1")));
        }
        Ok(Self { rate, jump })
    }

    /// Characteristic function of the jump law.
    pub fn jump_cf(&self, t: f64) -> Complex64 {
        or_nan(self.jump.integrate(|u| Complex64::new(0.0, t * u).exp(), &[]))
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.rate * (self.jump_cf(t) - 1.0)
    }

    /// Same law in Lévy–Khintchine form.
    pub fn to_lk(&self) -> Result<LevyKhintchinePair> {
        let g = self
            .jump
            .reweight(lk_weight_inverse, &[(0.0, 0.0)])?
            .scale(self.rate);
        let centre = self
            .jump
            .integrate_real(|u| u / (1.0 + u * u), &[])?;
        LevyKhintchinePair::new(self.rate * centre, g)
    }
}

/// `exp{rate (psi(t) - 1)}`.
pub fn cf_compound_poisson(spec: &CompoundPoissonSpec, t: f64) -> Complex64 {
    spec.log_cf(t).exp()
}

fn reweighted_mass_guard(k: &CanonicalMeasure, tail_mass: f64, bound: f64) -> Result<()> {
    let mass = if tail_mass > 0.0 { f64::INFINITY } else { k.total_mass() };
    if mass >= bound {
        return Err(Error::InfiniteVariance { mass, bound });
    }
    Ok(())
}

/// `K = (1+u^2) dG`, `gamma_k = gamma + ∫ u dG`, guarded by [`VARIANCE_BOUND`].
pub fn lk_to_kolmogorov(law: &LevyKhintchinePair) -> Result<KolmogorovPair> {
    lk_to_kolmogorov_with_bound(law, VARIANCE_BOUND)
}

/// As [`lk_to_kolmogorov`] with an explicit bound. A measure that was
/// truncated from an infinite support counts as having unbounded reweighted
/// mass, since `(1+u^2) dG` then carries its dropped tail to infinity.
pub fn lk_to_kolmogorov_with_bound(law: &LevyKhintchinePair, bound: f64) -> Result<KolmogorovPair> {
    let k = match law.g.reweight(|u| 1.0 + u * u, &[]) {
        Ok(k) => k,
        Err(Error::InfiniteWeight { .. }) => {
            return Err(Error::InfiniteVariance { mass: f64::INFINITY, bound })
        }
        Err(e) => return Err(e),
    };
    reweighted_mass_guard(&k, law.g.tail_mass(), bound)?;
    let first = law.g.integrate_real(|u| u, &[])?;
    KolmogorovPair::new(law.gamma + first, k.with_tail_mass(0.0))
}

pub fn kolmogorov_to_lk(law: &KolmogorovPair) -> Result<LevyKhintchinePair> {
    let g = law.k.reweight(|u| 1.0 / (1.0 + u * u), &[])?;
    let first = g.integrate_real(|u| u, &[])?;
    LevyKhintchinePair::new(law.gamma_k - first, g)
}

pub fn lk_to_levy(law: &LevyKhintchinePair) -> Result<LevyTriplet> {
    let sigma2 = law.g.atom_mass_at(0.0);
    let off_zero = law.g.without_atom(0.0);
    let negative = off_zero.restrict(Interval::below(0.0));
    let positive = off_zero.restrict(Interval::above(0.0));
    let m = negative.reweight(lk_weight, &[])?;
    let n = positive.reweight(lk_weight, &[])?;
    LevyTriplet::new(law.gamma, sigma2, m, n)
}

pub fn levy_to_lk(law: &LevyTriplet) -> Result<LevyKhintchinePair> {
    let m = law.m.reweight(lk_weight_inverse, &[])?;
    let n = law.n.reweight(lk_weight_inverse, &[])?;
    let mut g = m.merge(&n)?;
    if law.sigma2 > 0.0 {
        g = g.merge(&CanonicalMeasure::atom(0.0, law.sigma2)?)?;
    }
    LevyKhintchinePair::new(law.gamma, g)
}

/// A law given in any of the three forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw", into = "RawLaw")]
pub enum Law {
    Lk(LevyKhintchinePair),
    Kolmogorov(KolmogorovPair),
    Levy(LevyTriplet),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Lk,
    Kolmogorov,
    Levy,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::Lk => "lk",
            Form::Kolmogorov => "kolmogorov",
            Form::Levy => "levy",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lk" | "levy-khintchine" => Ok(Form::Lk),
            "kolmogorov" => Ok(Form::Kolmogorov),
            "levy" => Ok(Form::Levy),
            other => Err(Error::Parse(format!("unknown form '{other}'"))),
        }
    }
}

impl Law {
    pub fn form(&self) -> Form {
        match self {
            Law::Lk(_) => Form::Lk,
            Law::Kolmogorov(_) => Form::Kolmogorov,
            Law::Levy(_) => Form::Levy,
        }
    }

    pub fn log_cf(&self, t: f64) -> Complex64 {
        self.log_cf_with(&Rule::default(), t)
    }

    pub fn log_cf_with(&self, rule: &Rule, t: f64) -> Complex64 {
        match self {
            Law::Lk(l) => l.log_cf_with(rule, t),
            Law::Kolmogorov(l) => l.log_cf_with(rule, t),
            Law::Levy(l) => l.log_cf_with(rule, t),
        }
    }

    pub fn to_lk(&self) -> Result<LevyKhintchinePair> {
        match self {
            Law::Lk(l) => Ok(l.clone()),
            Law::Kolmogorov(l) => kolmogorov_to_lk(l),
            Law::Levy(l) => levy_to_lk(l),
        }
    }

    pub fn convert(&self, to: Form) -> Result<Law> {
        if self.form() == to {
            return Ok(self.clone());
        }
        let lk = self.to_lk()?;
        Ok(match to {
            Form::Lk => Law::Lk(lk),
            Form::Kolmogorov => Law::Kolmogorov(lk_to_kolmogorov(&lk)?),
            Form::Levy => Law::Levy(lk_to_levy(&lk)?),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RawLaw {
    form: String,
    gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(default)]
    measures: BTreeMap<String, CanonicalMeasure>,
}

impl TryFrom<RawLaw> for Law {
    type Error = Error;

    fn try_from(mut raw: RawLaw) -> Result<Self> {
        let mut take = |key: &str| raw.measures.remove(key).unwrap_or_default();
        let law = match raw.form.parse::<Form>()? {
            Form::Lk => Law::Lk(LevyKhintchinePair::new(raw.gamma, take("G"))?),
            Form::Kolmogorov => Law::Kolmogorov(KolmogorovPair::new(raw.gamma, take("K"))?),
            Form::Levy => {
                let (m, n) = (take("M"), take("N"));
                Law::Levy(LevyTriplet::new(raw.gamma, raw.sigma2.unwrap_or(0.0), m, n)?)
            }
        };
        if let Some(key) = raw.measures.keys().next() {
            return Err(Error::Parse(format!("unexpected measure '{key}' for form {}", law.form())));
        }
        if raw.sigma2.is_some() && law.form() != Form::Levy {
            return Err(Error::Parse("sigma2 only applies to the levy form".into()));
        }
        Ok(law)
    }
}

impl From<Law> for RawLaw {
    fn from(law: Law) -> Self {
        let form = law.form().as_str().to_string();
        let mut measures = BTreeMap::new();
        let (gamma, sigma2) = match law {
            Law::Lk(l) => {
                measures.insert("G".to_string(), l.g);
                (l.gamma, None)
            }
            Law::Kolmogorov(l) => {
                measures.insert("K".to_string(), l.k);
                (l.gamma_k, None)
            }
            Law::Levy(l) => {
                measures.insert("M".to_string(), l.m);
                measures.insert("N".to_string(), l.n);
                (l.gamma, Some(l.sigma2))
            }
        };
        RawLaw { form, gamma, sigma2, measures }
    }
}

pub mod catalog {
    //! Named laws with closed-form characteristic functions.
    //!
    //! Catalog strings are `name:p1,p2,...`:
    //! `gaussian:gamma,sigma2`, `poisson:rate,jump`, `cauchy:c` and
    //! `cpoisson:rate,loc1,p1,loc2,p2,...` (alias `compound_poisson`).

    use super::*;

    /// Upper end of the truncated Cauchy grid. The dropped mass on both
    /// sides is `(2c/π) atan(1/U)`, about `1e-10 c`.
    pub const CAUCHY_CUTOFF: f64 = 6.4e9;

    #[derive(Debug, Clone, PartialEq)]
    pub enum Catalog {
        Gaussian { gamma: f64, sigma2: f64 },
        Poisson { rate: f64, jump: f64 },
        Cauchy { c: f64 },
        CompoundPoisson(CompoundPoissonSpec),
    }

    impl Catalog {
        pub fn law(&self) -> Result<LevyKhintchinePair> {
            match *self {
                Catalog::Gaussian { gamma, sigma2 } => gaussian(gamma, sigma2),
                Catalog::Poisson { rate, jump } => poisson(rate, jump),
                Catalog::Cauchy { c } => cauchy(c),
                Catalog::CompoundPoisson(ref spec) => spec.to_lk(),
            }
        }

        /// Closed-form log-characteristic function.
        pub fn exact_log_cf(&self, t: f64) -> Complex64 {
            match self {
                Catalog::Gaussian { gamma, sigma2 } => Complex64::new(-0.5 * sigma2 * t * t, gamma * t),
                Catalog::Poisson { rate, jump } => rate * (Complex64::new(0.0, t * jump).exp() - 1.0),
                Catalog::Cauchy { c } => Complex64::new(-c * t.abs(), 0.0),
                Catalog::CompoundPoisson(spec) => spec.log_cf(t),
            }
        }
    }

    impl fmt::Display for Catalog {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match self {
                Catalog::Gaussian { gamma, sigma2 } => write!(f, "gaussian:{gamma},{sigma2}"),
                Catalog::Poisson { rate, jump } => write!(f, "poisson:{rate},{jump}"),
                Catalog::Cauchy { c } => write!(f, "cauchy:{c}"),
                Catalog::CompoundPoisson(spec) => {
                    write!(f, "cpoisson:{}", spec.rate)?;
                    for a in spec.jump.atoms() {
                        write!(f, ",{},{}", a.location, a.mass)?;
                    }
                    Ok(())
                }
            }
        }
    }

    impl FromStr for Catalog {
        type Err = Error;

        fn from_str(s: &str) -> Result<Self> {
            let (name, params) = s.split_once(':').unwrap_or((s, ""));
            let params: Vec<f64> = if params.trim().is_empty() {
                Vec::new()
            } else {
                params
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad number '{p}' in '{s}'")))
                    })
                    .collect::<Result<_>>()?
            };
            let arity = |n: usize| {
                if params.len() == n {
                    Ok(())
                } else {
                    Err(Error::Parse(format!("'{name}' takes {n} parameters, got {}", params.len())))
                }
            };
            let entry = match name.trim().to_ascii_lowercase().as_str() {
                "gaussian" | "normal" => {
                    arity(2)?;
                    Catalog::Gaussian { gamma: params[0], sigma2: params[1] }
                }
                "poisson" => {
                    arity(2)?;
                    Catalog::Poisson { rate: params[0], jump: params[1] }
                }
                "cauchy" => {
                    arity(1)?;
                    Catalog::Cauchy { c: params[0] }
                }
                "cpoisson" | "compound_poisson" => {
                    if params.len() < 3 || params.len() % 2 == 0 {
                        return Err(Error::Parse(format!(
                            "'{name}' takes a rate followed by location,probability pairs"
                        )));
                    }
                    let atoms: Vec<(f64, f64)> =
                        params[1..].chunks(2).map(|c| (c[0], c[1])).collect();
                    let jump = CanonicalMeasure::from_atoms(&atoms)?;
                    Catalog::CompoundPoisson(CompoundPoissonSpec::new(params[0], jump)?)
                }
                other => return Err(Error::Parse(format!("unknown catalog law '{other}'"))),
            };
            entry.law()?;
            Ok(entry)
        }
    }

    pub fn gaussian(gamma: f64, sigma2: f64) -> Result<LevyKhintchinePair> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::BadParameter(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        let g = if sigma2 > 0.0 { CanonicalMeasure::atom(0.0, sigma2)? } else { CanonicalMeasure::empty() };
        LevyKhintchinePair::new(gamma, g)
    }

    pub fn poisson(rate: f64, jump: f64) -> Result<LevyKhintchinePair> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::BadParameter(format!("rate must be positive, got {rate}")));
        }
        if !jump.is_finite() || jump == 0.0 {
            return Err(Error::BadParameter(format!("jump size must be finite and non-zero, got {jump}")));
        }
        let w = 1.0 + jump * jump;
        LevyKhintchinePair::new(rate * jump / w, CanonicalMeasure::atom(jump, rate * jump * jump / w)?)
    }

    pub fn cauchy(c: f64) -> Result<LevyKhintchinePair> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::BadParameter(format!("scale must be positive, got {c}")));
        }
        let half = cauchy_half_edges(CAUCHY_CUTOFF);
        let mut edges: Vec<f64> = half.iter().rev().map(|e| -e).collect();
        edges.extend_from_slice(&half[1..]);
        let k = c / std::f64::consts::PI;
        let values = edges
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                k * ((b - a) / (1.0 + a * b)).atan() / (b - a)
            })
            .collect();
        let u = *edges.last().expect("grid is non-empty");
        let tail = 2.0 * k * (1.0 / u).atan();
        Ok(LevyKhintchinePair::new(0.0, CanonicalMeasure::density(edges, values)?.with_tail_mass(tail))?)
    }

    /// Non-negative edges starting at 0: square-root grading near the origin,
    /// then geometric growth with a width cap in the mid range.
    fn cauchy_half_edges(cutoff: f64) -> Vec<f64> {
        const ALPHA: f64 = 5e-4;
        const CORE: f64 = 0.1;
        const INNER: f64 = 10.0;
        const MIDDLE: f64 = 3e4;
        let mut edges = vec![0.0];
        let mut u = 0.0_f64;
        while u < cutoff {
            let w = if u < CORE {
                (ALPHA * (CORE * u).sqrt()).max(ALPHA * ALPHA * CORE)
            } else if u < INNER {
                u * 1e-3
            } else if u < MIDDLE {
                (u * 3e-3).min(3.0)
            } else {
                u * 3e-3
            };
            u += w;
            edges.push(u);
        }
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn grid() -> Vec<f64> {
        (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn lk_examples() {
        let gauss = gaussian(0.0, 1.0).unwrap();
        assert_eq!(gauss.log_cf(2.0), Complex64::new(-2.0, 0.0));
        let p = poisson(1.0, 1.0).unwrap();
        assert_eq!(p.gamma, 0.5);
        assert_eq!(p.g, CanonicalMeasure::atom(1.0, 0.5).unwrap());
        for t in grid() {
            let exact = Complex64::new(0.0, t).exp() - 1.0;
            assert!(close(p.log_cf(t), exact, 1e-12), "t = {t}");
        }
    }

    #[test]
    fn kolmogorov_examples() {
        let g = KolmogorovPair::new(0.0, CanonicalMeasure::atom(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(g.log_cf(1.0), Complex64::new(-0.5, 0.0));
        let p = KolmogorovPair::new(1.0, CanonicalMeasure::atom(1.0, 1.0).unwrap()).unwrap();
        for t in grid() {
            assert!(close(p.log_cf(t), Complex64::new(0.0, t).exp() - 1.0, 1e-12));
        }
        let drift = KolmogorovPair::new(3.0, CanonicalMeasure::empty()).unwrap();
        assert_eq!(drift.log_cf(2.0), Complex64::new(0.0, 6.0));
    }

    #[test]
    fn levy_examples() {
        let e = CanonicalMeasure::empty();
        let g = LevyTriplet::new(1.0, 4.0, e.clone(), e.clone()).unwrap();
        assert_eq!(g.log_cf(1.0), Complex64::new(-2.0, 1.0));
        let p = LevyTriplet::new(0.5, 0.0, e.clone(), CanonicalMeasure::atom(1.0, 1.0).unwrap()).unwrap();
        let mirror = LevyTriplet::new(-0.5, 0.0, CanonicalMeasure::atom(-1.0, 1.0).unwrap(), e).unwrap();
        for t in grid() {
            assert!(close(p.log_cf(t), Complex64::new(0.0, t).exp() - 1.0, 1e-12));
            assert!(close(mirror.log_cf(t), Complex64::new(0.0, -t).exp() - 1.0, 1e-12));
        }
    }

    #[test]
    fn levy_rejects_misplaced_tails() {
        let e = CanonicalMeasure::empty();
        let pos = CanonicalMeasure::atom(1.0, 1.0).unwrap();
        assert!(LevyTriplet::new(0.0, 0.0, pos, e.clone()).is_err());
        assert!(LevyTriplet::new(0.0, -1.0, e.clone(), e).is_err());
    }

    #[test]
    fn conversion_examples() {
        let p = poisson(1.0, 1.0).unwrap();
        let k = lk_to_kolmogorov(&p).unwrap();
        assert_eq!(k.gamma_k, 1.0);
        assert_eq!(k.k, CanonicalMeasure::atom(1.0, 1.0).unwrap());
        let back = kolmogorov_to_lk(&k).unwrap();
        assert_eq!(back, p);

        let g = gaussian(0.0, 1.0).unwrap();
        let k = lk_to_kolmogorov(&g).unwrap();
        assert_eq!((k.gamma_k, &k.k), (0.0, &g.g));
        assert_eq!(kolmogorov_to_lk(&k).unwrap(), g);

        let drift = kolmogorov_to_lk(&KolmogorovPair::new(7.0, CanonicalMeasure::empty()).unwrap()).unwrap();
        assert_eq!(drift.gamma, 7.0);
        assert!(drift.g.is_empty());

        let err = lk_to_kolmogorov(&cauchy(1.0).unwrap()).unwrap_err();
        assert_eq!(err.code(), "InfiniteVariance");
    }

    #[test]
    fn levy_conversion_examples() {
        let l = lk_to_levy(&gaussian(0.0, 2.5).unwrap()).unwrap();
        assert_eq!((l.gamma, l.sigma2), (0.0, 2.5));
        assert!(l.m.is_empty() && l.n.is_empty());

        let l = lk_to_levy(&poisson(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((l.gamma, l.sigma2), (0.5, 0.0));
        assert_eq!(l.n, CanonicalMeasure::atom(1.0, 1.0).unwrap());

        let lk = LevyKhintchinePair::new(0.0, CanonicalMeasure::from_atoms(&[(0.0, 1.0), (-2.0, 0.4)]).unwrap())
            .unwrap();
        let l = lk_to_levy(&lk).unwrap();
        assert_eq!(l.sigma2, 1.0);
        assert!((l.m.atom_mass_at(-2.0) - 0.5).abs() < 1e-15);
        assert!(l.n.is_empty());
        for t in grid() {
            assert!(close(l.log_cf(t), lk.log_cf(t), 1e-12));
        }
        assert_eq!(l.m_function(-3.0), -0.5);
        assert_eq!(l.m_function(-1.0), 0.0);
    }

    #[test]
    fn compound_poisson_cf() {
        let spec = CompoundPoissonSpec::new(1.0, CanonicalMeasure::atom(1.0, 1.0).unwrap()).unwrap();
        for t in grid() {
            let exact = (Complex64::new(0.0, t).exp() - 1.0).exp();
            assert!(close(cf_compound_poisson(&spec, t), exact, 1e-14));
        }
        assert_eq!(cf_compound_poisson(&spec, 0.0), Complex64::new(1.0, 0.0));
        let root = CompoundPoissonSpec::new(2.5 / 4.0, spec.jump.clone()).unwrap();
        let t = 1.3;
        let exact = ((2.5 / 4.0) * (Complex64::new(0.0, t).exp() - 1.0)).exp();
        assert!(close(cf_compound_poisson(&root, t), exact, 1e-14));
        assert!(CompoundPoissonSpec::new(1.0, CanonicalMeasure::atom(1.0, 0.9).unwrap()).is_err());
    }

    #[test]
    fn cauchy_catalog() {
        let c = cauchy(1.0).unwrap();
        let mass = c.g.total_mass();
        assert!((mass + c.g.tail_mass() - 1.0).abs() < 1e-12);
        assert!(c.g.tail_mass() < 1e-10);
        assert!((c.log_cf(1.0) + 1.0).norm() < 1e-6);
    }

    #[test]
    fn catalog_strings() {
        let g: Catalog = "gaussian:0,1".parse().unwrap();
        assert_eq!(g, Catalog::Gaussian { gamma: 0.0, sigma2: 1.0 });
        let cp: Catalog = "cpoisson:2,-1,0.5,1,0.5".parse().unwrap();
        assert_eq!(cp.to_string(), "cpoisson:2,-1,0.5,1,0.5");
        assert!("cauchy:-1".parse::<Catalog>().is_err());
        assert!("poisson:1".parse::<Catalog>().is_err());
        assert!("nope:1".parse::<Catalog>().is_err());
        assert!("poisson:1,0".parse::<Catalog>().is_err());
    }

    #[test]
    fn law_json_round_trip() {
        let law = Law::Levy(lk_to_levy(&poisson(1.0, 1.0).unwrap()).unwrap());
        let s = serde_json::to_string(&law).unwrap();
        let back: Law = serde_json::from_str(&s).unwrap();
        assert_eq!(back, law);
        let lk: Law = serde_json::from_str(r#"{"form":"lk","gamma":0.5,"measures":{"G":{"atoms":[[1.0,0.5]]}}}"#)
            .unwrap();
        assert_eq!(lk, Law::Lk(poisson(1.0, 1.0).unwrap()));
        assert!(serde_json::from_str::<Law>(r#"{"form":"lk","gamma":0,"measures":{"K":{}}}"#).is_err());
        assert!(serde_json::from_str::<Law>(r#"{"form":"x","gamma":0}"#).is_err());
    }
}
