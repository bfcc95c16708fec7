use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant maps to a stable machine-readable code through [`Error::code`],
/// which the command-line front end embeds in its error reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("integrand is singular at atom u = {location} and no override value was supplied")]
    MissingAtomValue { location: f64 },

    #[error("integrand is not finite at quadrature node u = {location}")]
    NonFiniteIntegrand { location: f64 },

    #[error("weight is unbounded on the cell [{lo}, {hi}]")]
    InfiniteWeight { lo: f64, hi: f64 },

    #[error("reweighted mass {mass:e} exceeds the finite-variance bound {bound:e}")]
    InfiniteVariance { mass: f64, bound: f64 },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("characteristic function vanishes near t = {t}")]
    ZeroCrossing { t: f64 },

    #[error("probe difference {difference} lies outside the grid span {span}")]
    ProbeOutOfRange { difference: f64, span: f64 },

    #[error("{which} violated: lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolated {
        which: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("no convergence at u = {u}: successive sweeps differ by {difference:e} (threshold {threshold:e})")]
    NoConvergence {
        u: f64,
        difference: f64,
        threshold: f64,
    },

    #[error("t = {t} is out of range for a grid spanning [-{span}, {span}]")]
    OutOfRange { t: f64, span: f64 },

    #[error("inversion span T = {span} is below the minimum {minimum}")]
    InsufficientSpan { span: f64, minimum: f64 },

    #[error("K increases by {increase:e} at u = {u} (tolerance {tolerance:e})")]
    SignViolation { u: f64, increase: f64, tolerance: f64 },

    #[error("sample times must start at 0 and increase strictly")]
    BadTimes,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::MissingAtomValue { .. } => "MissingAtomValue",
            Error::NonFiniteIntegrand { .. } => "NonFiniteIntegrand",
            Error::InfiniteWeight { .. } => "InfiniteWeight",
            Error::InfiniteVariance { .. } => "InfiniteVariance",
            Error::BadParameter(_) => "BadParameter",
            Error::ZeroCrossing { .. } => "ZeroCrossing",
            Error::ProbeOutOfRange { .. } => "ProbeOutOfRange",
            Error::BoundViolated { .. } => "BoundViolated",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InsufficientSpan { .. } => "InsufficientSpan",
            Error::SignViolation { .. } => "SignViolation",
            Error::BadTimes => "BadTimes",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
