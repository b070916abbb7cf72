//! Run configuration: typed flag values merged over a key=value file.

use super::CliError;
use crate::models::{ModelKind, RelaxationModel};
use crate::timedomain::{Grid, GridScheme};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Spectral,
    Response,
    Relaxation,
    KernelM,
    KernelK,
    Permittivity,
}

impl Target {
    /// Name of the abscissa column.
    pub fn abscissa(self) -> &'static str {
        match self {
            Target::Spectral => "s",
            Target::Permittivity => "omega",
            _ => "t",
        }
    }

    pub fn is_time_domain(self) -> bool {
        self.abscissa() == "t"
    }
}

impl FromStr for Target {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral" => Ok(Target::Spectral),
            "response" => Ok(Target::Response),
            "relaxation" => Ok(Target::Relaxation),
            "kernel-m" | "kernel_m" => Ok(Target::KernelM),
            "kernel-k" | "kernel_k" => Ok(Target::KernelK),
            "permittivity" => Ok(Target::Permittivity),
            other => Err(CliError::Input(format!(
                "unknown target '{other}' (spectral, response, relaxation, kernel-M, kernel-k, permittivity)"
            ))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Spectral => "spectral",
            Target::Response => "response",
            Target::Relaxation => "relaxation",
            Target::KernelM => "kernel-M",
            Target::KernelK => "kernel-k",
            Target::Permittivity => "permittivity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Stieltjes,
    Sonine,
    Url,
    Equivalence,
    EwEquation,
    JwsIdentity,
    All,
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "stieltjes" => Ok(Suite::Stieltjes),
            "sonine" => Ok(Suite::Sonine),
            "url" => Ok(Suite::Url),
            "equivalence" => Ok(Suite::Equivalence),
            "ew-equation" => Ok(Suite::EwEquation),
            "jws-identity" => Ok(Suite::JwsIdentity),
            "all" => Ok(Suite::All),
            other => Err(CliError::Input(format!(
                "unknown suite '{other}' (stieltjes, sonine, url, equivalence, ew-equation, jws-identity, all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Input(format!("unknown format '{other}' (csv, json)"))),
        }
    }
}

/// `start:stop:count:log|lin`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scheme: GridScheme,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, CliError> {
        let g = match self.scheme {
            GridScheme::Uniform => Grid::uniform(self.start, self.stop, self.count.saturating_sub(1))?,
            GridScheme::Logarithmic => Grid::logarithmic(self.start, self.stop, self.count)?,
        };
        Ok(g)
    }
}

impl FromStr for GridSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Input(format!("grid '{s}': {why} (expected start:stop:count:log|lin)"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 4 {
            return Err(bad("need four fields"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad(&format!("'{p}' is not a number")));
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(&format!("'{}' is not a point count", parts[2])))?;
        let scheme = match parts[3].trim().to_ascii_lowercase().as_str() {
            "log" => GridScheme::Logarithmic,
            "lin" => GridScheme::Uniform,
            other => return Err(bad(&format!("unknown spacing '{other}'"))),
        };
        if count < 3 {
            return Err(bad("count must be at least 3"));
        }
        Ok(Self {
            start,
            stop,
            count,
            scheme,
        })
    }
}

/// Values that may come from the command line or from the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub model: Option<String>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub tau: Option<String>,
    pub tau1: Option<String>,
    pub tau2: Option<String>,
    pub rate: Option<String>,
    pub target: Option<String>,
    pub suite: Option<String>,
    pub grid: Option<String>,
    pub s: Option<String>,
    pub t: Option<String>,
    pub format: Option<String>,
    pub seed: Option<String>,
    pub tol: Option<String>,
    pub eps0: Option<String>,
    pub epsinf: Option<String>,
    pub data: Option<String>,
}

/// Parses `key = value` lines; blank lines and lines starting with '#' are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key=value, got '{line}'", i + 1)))?;
        let key = key.trim().trim_start_matches("--").to_ascii_lowercase().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Input(format!("config line {}: empty key", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

impl Options {
    /// Fills unset options from config entries; unknown keys are rejected.
    pub fn fill_from(&mut self, file: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (key, value) in file {
            let slot = match key.as_str() {
                "model" => &mut self.model,
                "alpha" => &mut self.alpha,
                "beta" => &mut self.beta,
                "tau" => &mut self.tau,
                "tau1" => &mut self.tau1,
                "tau2" => &mut self.tau2,
                "rate-b" | "b" | "rate" => &mut self.rate,
                "target" => &mut self.target,
                "suite" => &mut self.suite,
                "grid" => &mut self.grid,
                "s" => &mut self.s,
                "t" => &mut self.t,
                "format" => &mut self.format,
                "seed" => &mut self.seed,
                "tol" => &mut self.tol,
                "eps0" => &mut self.eps0,
                "epsinf" => &mut self.epsinf,
                "data" => &mut self.data,
                other => return Err(CliError::Input(format!("unknown config key '{other}'"))),
            };
            if slot.is_none() {
                *slot = Some(value.clone());
            }
        }
        Ok(())
    }
}

fn parse_opt<T: FromStr>(name: &str, v: &Option<String>) -> Result<Option<T>, CliError> {
    v.as_deref()
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| CliError::Input(format!("--{name}: cannot parse '{s}'")))
        })
        .transpose()
}

/// Fully parsed settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Option<RelaxationModel>,
    pub kind: Option<ModelKind>,
    pub target: Option<Target>,
    pub suite: Option<Suite>,
    pub grid: Option<GridSpec>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub format: Option<Format>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub eps0: Option<f64>,
    pub epsinf: Option<f64>,
    pub data: Option<String>,
}

impl RunConfig {
    /// Parses the options. The model is built only when all its parameters are
    /// present; `require_params` turns a missing parameter into an error.
    pub fn from_options(o: &Options, require_params: bool) -> Result<Self, CliError> {
        let kind: Option<ModelKind> = o.model.as_deref().map(|s| s.parse()).transpose()?;
        let alpha = parse_opt::<f64>("alpha", &o.alpha)?;
        let beta = parse_opt::<f64>("beta", &o.beta)?;
        let tau = parse_opt::<f64>("tau", &o.tau)?;
        let tau1 = parse_opt::<f64>("tau1", &o.tau1)?;
        let tau2 = parse_opt::<f64>("tau2", &o.tau2)?;
        let rate = parse_opt::<f64>("rate-B", &o.rate)?;
        let model = match kind {
            Some(k) if require_params => Some(RelaxationModel::from_parts(k, alpha, beta, tau, tau1, tau2, rate)?),
            _ => None,
        };
        let tol = parse_opt::<f64>("tol", &o.tol)?;
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Input(format!("--tol must be positive, got {t}")));
            }
        }
        Ok(Self {
            model,
            kind,
            target: o.target.as_deref().map(str::parse).transpose()?,
            suite: o.suite.as_deref().map(str::parse).transpose()?,
            grid: o.grid.as_deref().map(str::parse).transpose()?,
            s: parse_opt("s", &o.s)?,
            t: parse_opt("t", &o.t)?,
            format: o.format.as_deref().map(str::parse).transpose()?,
            seed: parse_opt("seed", &o.seed)?.unwrap_or(DEFAULT_SEED),
            tol,
            eps0: parse_opt("eps0", &o.eps0)?,
            epsinf: parse_opt("epsinf", &o.epsinf)?,
            data: o.data.clone(),
        })
    }

    pub fn require_model(&self) -> Result<&RelaxationModel, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Input("--model is required".into()))
    }
}
