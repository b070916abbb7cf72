//! Command-line front end: `eval`, `check` and `fit`.

pub mod config;
pub mod data;
pub mod fit;

use crate::analysis::{self, PropertyReport};
use crate::evolution::{self, SolverSettings};
use crate::models::{self, Family, RelaxationModel};
use crate::timedomain::{self, Grid};
use clap::{Args, Parser, Subcommand};
use config::{Format, Options, RunConfig, Suite, Target};
use serde_json::json;
use std::ffi::OsString;
use std::io::{Read, Write};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const LOG_ENV: &str = "RELAXKIT_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode output: {0}")]
    Encode(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_input_error() => EXIT_INPUT,
            CliError::Core(_) | CliError::Encode(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "relaxkit", version, about = "Non-Debye relaxation models: evaluation, property checks and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a spectral, time-domain or permittivity curve
    Eval(Flags),
    /// Run property and solver verification suites
    Check(Flags),
    /// Fit a model to a permittivity spectrum read as CSV
    Fit(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// debye, cc, cd, hn, jws or ew
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub tau1: Option<String>,
    #[arg(long)]
    pub tau2: Option<String>,
    /// Rate B in 1/time; defaults to 1/tau
    #[arg(long = "rate-B")]
    pub rate: Option<String>,
    /// spectral, response, relaxation, kernel-M, kernel-k or permittivity
    #[arg(long)]
    pub target: Option<String>,
    /// stieltjes, sonine, url, equivalence, ew-equation, jws-identity or all
    #[arg(long)]
    pub suite: Option<String>,
    /// start:stop:count:log|lin
    #[arg(long)]
    pub grid: Option<String>,
    /// Single Laplace variable (angular frequency for permittivity)
    #[arg(long = "s")]
    pub s: Option<String>,
    /// Single time
    #[arg(long = "t")]
    pub t: Option<String>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Seed of the multi-start fit
    #[arg(long)]
    pub seed: Option<String>,
    /// key=value file; flags take precedence
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    /// Static permittivity for the permittivity target (default 1)
    #[arg(long)]
    pub eps0: Option<String>,
    /// High-frequency permittivity for the permittivity target (default 0)
    #[arg(long)]
    pub epsinf: Option<String>,
    /// Input CSV for fit; standard input when absent
    #[arg(long)]
    pub data: Option<String>,
}

impl Flags {
    fn options(&self) -> Result<Options, CliError> {
        let mut o = Options {
            model: self.model.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            tau: self.tau.clone(),
            tau1: self.tau1.clone(),
            tau2: self.tau2.clone(),
            rate: self.rate.clone(),
            target: self.target.clone(),
            suite: self.suite.clone(),
            grid: self.grid.clone(),
            s: self.s.clone(),
            t: self.t.clone(),
            format: self.format.clone(),
            seed: self.seed.clone(),
            tol: self.tol.clone(),
            eps0: self.eps0.clone(),
            epsinf: self.epsinf.clone(),
            data: self.data.clone(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read config file '{path}': {e}")))?;
            o.fill_from(&config::parse_config_file(&text)?)?;
        }
        Ok(o)
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    let outcome = match &cli.command {
        Command::Eval(f) => f.options().and_then(|o| cmd_eval(&RunConfig::from_options(&o, true)?, out)),
        Command::Check(f) => f.options().and_then(|o| cmd_check(&RunConfig::from_options(&o, true)?, out)),
        Command::Fit(f) => f.options().and_then(|o| {
            let cfg = RunConfig::from_options(&o, false)?;
            match &cfg.data {
                Some(path) => {
                    let file = std::fs::File::open(path)
                        .map_err(|e| CliError::Input(format!("cannot open data file '{path}': {e}")))?;
                    cmd_fit(&cfg, file, out)
                }
                None => cmd_fit(&cfg, stdin, out),
            }
        }),
    };
    match outcome {
        Ok(code) => code,
        // reader closed early, as with `| head`
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn abscissas(cfg: &RunConfig, target: Target) -> Result<Vec<f64>, CliError> {
    let (single, other, name, other_name) = if target.is_time_domain() {
        (cfg.t, cfg.s, "--t", "--s")
    } else {
        (cfg.s, cfg.t, "--s", "--t")
    };
    if other.is_some() {
        return Err(CliError::Input(format!("target {target} takes {name}, not {other_name}")));
    }
    match (single, &cfg.grid) {
        (Some(_), Some(_)) => Err(CliError::Input(format!("give either {name} or --grid, not both"))),
        (Some(x), None) => Ok(vec![x]),
        (None, Some(g)) => Ok(g.build()?.nodes().to_vec()),
        (None, None) => Err(CliError::Input(format!("target {target} needs {name} or --grid"))),
    }
}

/// Evaluates one target on the requested abscissas.
pub fn cmd_eval(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = cfg.require_model()?;
    let target = cfg.target.ok_or_else(|| CliError::Input("--target is required".into()))?;
    let xs = abscissas(cfg, target)?;
    let format = cfg.format.unwrap_or(Format::Csv);
    if target == Target::Permittivity {
        let (eps0, epsinf) = (cfg.eps0.unwrap_or(1.0), cfg.epsinf.unwrap_or(0.0));
        let pts = xs
            .iter()
            .map(|&w| models::complex_permittivity(m, w, eps0, epsinf))
            .collect::<crate::Result<Vec<_>>>()?;
        match format {
            Format::Csv => write!(out, "{}", data::write_spectrum(&pts))?,
            Format::Json => writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&json!({
                    "model": m, "target": target.to_string(), "eps0": eps0, "epsinf": epsinf, "points": pts
                }))?
            )?,
        }
        return Ok(EXIT_OK);
    }
    let mut delta = None;
    let mut values = Vec::with_capacity(xs.len());
    for &x in &xs {
        let v = match target {
            Target::Spectral => models::spectral(m, x)?,
            Target::Relaxation => timedomain::relaxation(m, x)?,
            Target::Response | Target::KernelM | Target::KernelK => {
                let p = match target {
                    Target::Response => timedomain::response_at(m, x)?,
                    Target::KernelM => timedomain::kernel_m_at(m, x)?,
                    _ => timedomain::kernel_k_at(m, x)?,
                };
                delta = Some(p.delta_weight);
                p.value
            }
            Target::Permittivity => unreachable!("handled above"),
        };
        values.push(v);
    }
    let col = target.abscissa();
    match format {
        Format::Csv => {
            if let Some(w) = delta {
                writeln!(out, "# delta_weight,{w:?}")?;
            }
            writeln!(out, "{col},value")?;
            for (x, v) in xs.iter().zip(&values) {
                writeln!(out, "{x:?},{v:?}")?;
            }
        }
        Format::Json => {
            let points: Vec<_> = xs.iter().zip(&values).map(|(x, v)| json!({ col: x, "value": v })).collect();
            let mut doc = json!({ "model": m, "target": target.to_string(), "points": points });
            if let Some(w) = delta {
                doc["delta_weight"] = json!(w);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(EXIT_OK)
}

fn grid_or(cfg: &RunConfig, default: impl FnOnce() -> crate::Result<Grid>) -> Result<Grid, CliError> {
    match &cfg.grid {
        Some(g) => g.build(),
        None => Ok(default()?),
    }
}

fn run_suite(m: &RelaxationModel, suite: Suite, cfg: &RunConfig) -> Result<Vec<PropertyReport>, CliError> {
    let tau = m.time_scale();
    let reports = match suite {
        Suite::Stieltjes => {
            let g = grid_or(cfg, || Grid::logarithmic(1e-4 / tau, 1e4 / tau, 41))?;
            analysis::model_function_classes(m, &g)?
        }
        Suite::Sonine => {
            let g = grid_or(cfg, || Grid::logarithmic(0.01 * tau, 10.0 * tau, 40))?;
            vec![analysis::model_sonine_residual(m, &g)?]
        }
        Suite::Url => analysis::check_url(m)?,
        Suite::Equivalence => {
            let settings = match &cfg.grid {
                Some(g) => SolverSettings::new(g.build()?),
                None => SolverSettings::uniform(5.0 * tau, 2048)?.with_window(0.05 * tau, 5.0 * tau),
            };
            let tol = cfg.tol.unwrap_or(settings.tol);
            let settings = settings.with_tol(tol);
            vec![evolution::verify_equivalence(m, &settings)?]
        }
        Suite::EwEquation => {
            let g = grid_or(cfg, || Grid::uniform(0.1 * tau, 5.0 * tau, 49 * 32))?;
            vec![evolution::ew_equation_residual(m, &g)?]
        }
        Suite::JwsIdentity => {
            if m.family() != Family::Jws {
                return Err(CliError::Input("the jws-identity suite needs the jws model".into()));
            }
            let g = grid_or(cfg, || Grid::logarithmic(0.01 * tau, 10.0 * tau, 40))?;
            vec![evolution::jws_convolution_identity(m, &g)?]
        }
        Suite::All => {
            let mut suites = vec![Suite::Stieltjes, Suite::Sonine];
            match m.family() {
                Family::Ew if m.alpha < 1.0 => suites.push(Suite::EwEquation),
                Family::Ew => {}
                Family::Jws => suites.extend([Suite::Url, Suite::JwsIdentity]),
                Family::Hn => suites.push(Suite::Url),
            }
            suites.push(Suite::Equivalence);
            let defaults = RunConfig { grid: None, ..cfg.clone() };
            let mut all = Vec::new();
            for s in suites {
                all.extend(run_suite(m, s, &defaults)?);
            }
            let g = Grid::logarithmic(0.1 * tau, 5.0 * tau, 50)?;
            all.push(analysis::check_response_relaxation(m, &g)?);
            all
        }
    };
    Ok(reports)
}

/// Runs a verification suite and writes its reports.
pub fn cmd_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = cfg.require_model()?;
    let suite = cfg.suite.unwrap_or(Suite::All);
    let mut reports = run_suite(m, suite, cfg)?;
    if let Some(tol) = cfg.tol {
        reports = reports.into_iter().map(|r| r.with_tolerance(tol)).collect();
    }
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&reports)?)?,
        Format::Csv => {
            writeln!(out, "property,subject,max_violation,tolerance,verdict")?;
            for r in &reports {
                let property = serde_json::to_value(r.property)?;
                let verdict = serde_json::to_value(r.verdict)?;
                writeln!(
                    out,
                    "{},\"{}\",{:?},{:?},{}",
                    property.as_str().unwrap_or_default(),
                    r.subject.replace('"', "'"),
                    r.max_violation,
                    r.tolerance,
                    verdict.as_str().unwrap_or_default()
                )?;
            }
        }
    }
    for r in reports.iter().filter(|r| !r.passed()) {
        log::warn!("{} failed: {:e} > {:e}", r.subject, r.max_violation, r.tolerance);
    }
    Ok(if reports.iter().all(PropertyReport::passed) {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILURE
    })
}

/// Fits the configured model kind to a CSV spectrum.
pub fn cmd_fit(cfg: &RunConfig, input: impl Read, out: &mut dyn Write) -> Result<i32, CliError> {
    let kind = cfg.kind.ok_or_else(|| CliError::Input("--model is required".into()))?;
    let points = data::read_spectrum(input)?;
    let mut opts = fit::FitOptions {
        seed: cfg.seed,
        ..Default::default()
    };
    if let Some(tol) = cfg.tol {
        opts.tol = tol;
    }
    let r = fit::fit(kind, &points, &opts)?;
    if !r.converged {
        log::warn!("fit did not converge within {} iterations", r.iterations);
    }
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Csv => {
            let m = &r.model;
            writeln!(out, "model,alpha,beta,tau,tau1,tau2,B,eps0,epsinf,residual_norm,iterations,converged")?;
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
                m.kind, m.alpha, m.beta, m.tau, m.tau1, m.tau2, m.rate, r.eps0, r.epsinf, r.residual_norm, r.iterations, r.converged
            )?;
        }
    }
    Ok(EXIT_OK)
}
