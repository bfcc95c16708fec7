//! The verbs. Each resolves its configuration, logs it, and writes its
//! artifacts.

use clap::{Args, Subcommand};
use infdiv::canonical_forms::{Form, Law};
use infdiv::divisibility::{default_probe_sets, verify_infinitely_divisible, CharacteristicFunctionGrid};
use infdiv::khinchin::{definetti_sequence_against, invert, is_non_increasing, InversionConfig, Window};
use infdiv::quadrature::DEFAULT_ORDER;
use infdiv::simulate::{empirical_cf, write_paths_csv, Process, ProcessSpec};
use infdiv::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::Artifacts;
use crate::source::{LawSource, SampledCf};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the log-characteristic function.
    Eval(EvalArgs),
    /// Rewrite a law in another canonical form.
    Convert(ConvertArgs),
    /// Recover the canonical measure from the characteristic function.
    Invert(InvertArgs),
    /// Check n-th roots for positive definiteness and look for zeros.
    VerifyId(VerifyArgs),
    /// Compound-Poisson approximations at decreasing truncation levels.
    ApproxCp(ApproxArgs),
    /// Sample paths of the process with the law at time 1.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    source: LawSource,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Evaluate in this form (lk, kolmogorov, levy) instead of the given one.
    #[arg(long)]
    form: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    #[command(flatten)]
    source: LawSource,
    /// Target form: lk, kolmogorov or levy.
    #[arg(long)]
    to: String,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    #[command(flatten)]
    source: LawSource,
    /// Length of the inversion range `[-T, T]`, i.e. `2T`.
    #[arg(long, default_value_t = 80.0)]
    t_span: f64,
    #[arg(long, default_value_t = 0.01)]
    t_step: f64,
    #[arg(long, default_value_t = 5.0)]
    u_max: f64,
    #[arg(long, default_value_t = 0.01)]
    u_step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct CfSource {
    /// Catalog law, as for the other verbs.
    #[arg(long)]
    catalog: Option<String>,
    /// Law JSON file.
    #[arg(long)]
    law: Option<std::path::PathBuf>,
    /// Sampled characteristic function: CSV with columns t, re, im on a
    /// symmetric uniform grid.
    #[arg(long)]
    cf_csv: Option<std::path::PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    source: CfSource,
    #[arg(long, default_value_t = 12.0)]
    t_max: f64,
    #[arg(long, default_value_t = 481)]
    points: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5")]
    roots: Vec<u32>,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    source: LawSource,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.02")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    source: LawSource,
    /// Jumps with `|u| <= epsilon` are dropped.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Equal time steps per path.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid for the empirical characteristic function of `X(horizon)`.
    #[arg(long, default_value_t = 5.0)]
    cf_t_max: f64,
    #[arg(long, default_value_t = 101)]
    cf_points: usize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Convert(_) => "convert",
            Command::Invert(_) => "invert",
            Command::VerifyId(_) => "verify-id",
            Command::ApproxCp(_) => "approx-cp",
            Command::Simulate(_) => "simulate",
        }
    }

    /// Resolved configuration: the arguments with defaults filled in, plus
    /// the library settings the verb depends on.
    pub fn config(&self) -> Value {
        let (args, extra) = match self {
            Command::Eval(a) => (to_value(a), json!({ "quadrature_order": DEFAULT_ORDER })),
            Command::Convert(a) => (to_value(a), json!({ "quadrature_order": DEFAULT_ORDER })),
            Command::Invert(a) => (to_value(a), json!({ "inversion": inversion_config(a) })),
            Command::VerifyId(a) => (to_value(a), json!({ "probe_sets": default_probe_sets() })),
            Command::ApproxCp(a) => (to_value(a), json!({ "quadrature_order": DEFAULT_ORDER })),
            Command::Simulate(a) => (to_value(a), json!({ "rng": "chacha8, keyed by (seed, path, interval)" })),
        };
        let mut config = json!({ "verb": self.name() });
        for v in [args, extra] {
            if let (Value::Object(target), Value::Object(fields)) = (&mut config, v) {
                target.extend(fields);
            }
        }
        config
    }

    pub fn run(&self, config: &Value, out: &mut Artifacts) -> Result<()> {
        match self {
            Command::Eval(a) => eval(a, config, out),
            Command::Convert(a) => convert(a, config, out),
            Command::Invert(a) => run_invert(a, config, out),
            Command::VerifyId(a) => verify(a, config, out),
            Command::ApproxCp(a) => approx_cp(a, config, out),
            Command::Simulate(a) => simulate(a, config, out),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("arguments serialize")
}

fn symmetric_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || points < 3 || points % 2 == 0 {
        return Err(Error::BadParameter("the t grid needs t_max > 0 and an odd number of at least 3 points".into()));
    }
    let m = (points - 1) / 2;
    Ok((0..points).map(|i| t_max * (i as f64 - m as f64) / m as f64).collect())
}

fn eval(a: &EvalArgs, _config: &Value, out: &mut Artifacts) -> Result<()> {
    let mut law = a.source.load()?.law;
    if let Some(form) = &a.form {
        law = law.convert(form.parse::<Form>()?)?;
    }
    let grid = CharacteristicFunctionGrid::from_log(|t| law.log_cf(t), a.t_max, a.points)?;
    out.write_with("eval.csv", |w| grid.write_csv(w))
}

fn convert(a: &ConvertArgs, config: &Value, out: &mut Artifacts) -> Result<()> {
    let law = a.source.load()?.law;
    let converted: Law = law.convert(a.to.parse::<Form>()?)?;
    let t = symmetric_grid(10.0, 201)?;
    let gap = t.iter().map(|&t| (converted.log_cf(t) - law.log_cf(t)).norm()).fold(0.0, f64::max);
    out.write_report(
        "convert.json",
        config,
        json!({ "law": converted, "max_log_cf_gap": gap, "gap_grid": { "t_max": 10.0, "points": 201 } }),
    )
}

fn inversion_config(a: &InvertArgs) -> InversionConfig {
    let defaults = InversionConfig::default();
    InversionConfig {
        window: Window { half_span: 0.5 * a.t_span, ..defaults.window },
        u_max: a.u_max,
        u_step: a.u_step,
        recovery: defaults.recovery,
    }
}

fn run_invert(a: &InvertArgs, config: &Value, out: &mut Artifacts) -> Result<()> {
    if !(a.t_step > 0.0 && a.t_span > 0.0) {
        return Err(Error::BadParameter("t-span and t-step must be positive".into()));
    }
    let loaded = a.source.load()?;
    // Δ needs the characteristic function one unit beyond the window
    let half = (0.5 * a.t_span / a.t_step).round() as usize + (1.0 / a.t_step).round() as usize;
    let cf = CharacteristicFunctionGrid::from_log(|t| loaded.reference_log_cf(t), half as f64 * a.t_step, 2 * half + 1)?;
    let report = invert(&cf, &inversion_config(a))?;
    out.write_with("invert_k.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["u", "k"]).map_err(Error::from)?;
        for (u, k) in &report.k_samples {
            csv.serialize((u, k)).map_err(Error::from)?;
        }
        csv.flush().map_err(Error::from)
    })?;
    out.write_report(
        "invert.json",
        config,
        json!({
            "taper": report.taper,
            "jumps": report.jumps,
            "recovered_g": report.recovered_g,
            "recovered_gamma": report.recovered_gamma,
            "reconstruction_error": report.reconstruction_error,
        }),
    )
}

fn verify(a: &VerifyArgs, config: &Value, out: &mut Artifacts) -> Result<()> {
    let probes = default_probe_sets();
    let report = match (&a.source.catalog, &a.source.law, &a.source.cf_csv) {
        (None, None, Some(path)) => {
            let sampled = SampledCf::read(path)?;
            verify_infinitely_divisible(|t| sampled.at(t), sampled.t_max, sampled.points, &a.roots, &probes, a.tolerance)?
        }
        (catalog, law, _) => {
            let source = LawSource { catalog: catalog.clone(), law: law.clone() };
            let loaded = source.load()?;
            let cf = |t| loaded.reference_log_cf(t).exp();
            verify_infinitely_divisible(cf, a.t_max, a.points, &a.roots, &probes, a.tolerance)?
        }
    };
    out.write_report("verify.json", config, json!({ "report": report }))
}

fn approx_cp(a: &ApproxArgs, config: &Value, out: &mut Artifacts) -> Result<()> {
    let loaded = a.source.load()?;
    let law = loaded.lk()?;
    let t = symmetric_grid(a.t_max, a.points)?;
    let steps = definetti_sequence_against(&law, &a.epsilons, &t, |t| loaded.reference_log_cf(t).exp())?;
    let rows: Vec<Value> = steps
        .iter()
        .map(|s| {
            let tr = &s.truncation;
            json!({
                "epsilon": tr.epsilon,
                "lambda_eps": tr.lambda_eps,
                "drift": tr.drift,
                "gaussian_mass": tr.gaussian_mass,
                "jump_distribution": tr.jump_distribution,
                "sup_cf_error": s.error,
            })
        })
        .collect();
    let reference = if loaded.catalog.is_some() { "closed form" } else { "law evaluator" };
    out.write_report(
        "approx_cp.json",
        config,
        json!({ "reference": reference, "steps": rows, "non_increasing": is_non_increasing(&steps, 0.0) }),
    )
}

fn simulate(a: &SimulateArgs, config: &Value, out: &mut Artifacts) -> Result<()> {
    if a.steps == 0 || a.paths == 0 {
        return Err(Error::BadParameter("steps and paths must be positive".into()));
    }
    let law = a.source.load()?.lk()?;
    let process = Process::new(ProcessSpec::new(law, a.epsilon, a.horizon, a.seed)?)?;
    let times: Vec<f64> = (0..=a.steps).map(|i| a.horizon * i as f64 / a.steps as f64).collect();
    let paths = (0..a.paths).map(|p| process.sample_path(&times, p)).collect::<Result<Vec<_>>>()?;
    out.write_with("simulate_paths.csv", |w| write_paths_csv(&paths, w))?;

    let endpoints: Vec<f64> = paths.iter().map(|p| *p.values.last().expect("non-empty path")).collect();
    let t = symmetric_grid(a.cf_t_max, a.cf_points)?;
    let ecf = empirical_cf(&endpoints, &t)?;
    out.write_with("simulate_ecf.csv", |w| ecf.write_csv(w))?;

    let exact = |t: f64| process.log_cf(t, a.horizon).exp();
    let sampled = |t: f64| process.sampled_log_cf(t, a.horizon).exp();
    let tr = process.truncation();
    out.write_report(
        "simulate.json",
        config,
        json!({
            "truncation": { "lambda_eps": tr.lambda_eps, "drift": tr.drift, "gaussian_mass": tr.gaussian_mass },
            "endpoint_cf": {
                "draws": endpoints.len(),
                "fraction_inside_envelope": ecf.fraction_inside(sampled),
                "sup_gap_to_sampled_law": ecf.sup_gap(sampled),
                "sup_gap_to_law": ecf.sup_gap(exact),
            },
            "mean_endpoint": endpoints.iter().sum::<f64>() / endpoints.len() as f64,
        }),
    )
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    #[test]
    fn grids() {
        assert_eq!(symmetric_grid(1.0, 5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(symmetric_grid(1.0, 4).is_err());
        assert!(symmetric_grid(0.0, 5).is_err());
    }

    #[test]
    fn inversion_settings_follow_the_span() {
        let a = InvertArgs {
            source: LawSource { catalog: Some("poisson:1,1".into()), law: None },
            t_span: 100.0,
            t_step: 0.01,
            u_max: 4.0,
            u_step: 0.02,
        };
        let c = inversion_config(&a);
        assert_eq!((c.window.half_span, c.u_max, c.u_step), (50.0, 4.0, 0.02));
    }

    #[test]
    fn sampled_cf_closure_reads_nearest_sample() {
        let s = SampledCf::new(&[-1.0, 0.0, 1.0], vec![Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.0)]).unwrap();
        assert_eq!(s.at(0.1), Complex64::new(1.0, 0.0));
    }
}
