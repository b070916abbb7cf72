//! Least-squares fits of model permittivity to measured spectra.

use super::CliError;
use crate::models::{continued, ModelKind, PermittivityPoint, RelaxationModel};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest exponent reachable by the fit.
const EXPONENT_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: RelaxationModel,
    pub eps0: f64,
    pub epsinf: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    pub starts: usize,
    pub max_iterations: usize,
    /// Simplex size at which a start is considered converged.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: super::config::DEFAULT_SEED,
            starts: 5,
            max_iterations: 4000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Param {
    Alpha,
    Beta,
    Tau,
    Tau1,
    Tau2,
}

impl Param {
    fn is_exponent(self) -> bool {
        matches!(self, Param::Alpha | Param::Beta)
    }
}

fn layout(kind: ModelKind) -> &'static [Param] {
    match kind {
        ModelKind::Debye => &[Param::Tau],
        ModelKind::ColeCole => &[Param::Alpha, Param::Tau],
        ModelKind::ColeDavidson => &[Param::Beta, Param::Tau],
        ModelKind::HavriliakNegami | ModelKind::Jws => &[Param::Alpha, Param::Beta, Param::Tau],
        ModelKind::ExcessWing => &[Param::Alpha, Param::Tau1, Param::Tau2],
    }
}

// exponents live on a sin² map so both ends of (0, 1] stay reachable; times on ln
fn exponent_of(x: f64) -> f64 {
    EXPONENT_FLOOR + (1.0 - EXPONENT_FLOOR) * x.sin().powi(2)
}

fn exponent_coordinate(e: f64) -> f64 {
    ((e - EXPONENT_FLOOR) / (1.0 - EXPONENT_FLOOR)).clamp(0.0, 1.0).sqrt().asin()
}

fn model_of(kind: ModelKind, x: &[f64]) -> crate::Result<RelaxationModel> {
    let mut alpha = None;
    let mut beta = None;
    let mut tau = None;
    let mut tau1 = None;
    let mut tau2 = None;
    for (p, &v) in layout(kind).iter().zip(x) {
        match p {
            Param::Alpha => alpha = Some(exponent_of(v)),
            Param::Beta => beta = Some(exponent_of(v)),
            Param::Tau => tau = Some(v.exp()),
            Param::Tau1 => tau1 = Some(v.exp()),
            Param::Tau2 => tau2 = Some(v.exp()),
        }
    }
    RelaxationModel::from_parts(kind, alpha, beta, tau, tau1, tau2, None)
}

struct Problem<'a> {
    kind: ModelKind,
    data: &'a [PermittivityPoint],
    /// Weights of the real and imaginary residual of each point.
    weights: Vec<(f64, f64)>,
}

/// Amplitudes (ε_∞, ε₀ − ε_∞) and the weighted mean square residual.
struct Projection {
    epsinf: f64,
    delta: f64,
    cost: f64,
}

impl<'a> Problem<'a> {
    fn new(kind: ModelKind, data: &'a [PermittivityPoint]) -> Self {
        // each point stands for the stretch of ln ω around it; within a point
        // each component is weighted by its own magnitude
        let ln: Vec<f64> = data.iter().map(|p| p.omega.ln()).collect();
        let n = ln.len();
        let span: Vec<f64> = (0..n)
            .map(|j| {
                let lo = if j == 0 { ln[0] } else { 0.5 * (ln[j - 1] + ln[j]) };
                let hi = if j + 1 == n { ln[n - 1] } else { 0.5 * (ln[j] + ln[j + 1]) };
                hi - lo
            })
            .collect();
        let total: f64 = span.iter().sum();
        let floor = 1e-9 * data.iter().map(|p| p.eps_real.abs().max(p.eps_imag.abs())).fold(0.0, f64::max);
        let weights = data
            .iter()
            .zip(&span)
            .map(|(p, w)| {
                let w = w * n as f64 / total;
                (w / p.eps_real.abs().max(floor).powi(2), w / p.eps_imag.abs().max(floor).powi(2))
            })
            .collect();
        Self { kind, data, weights }
    }

    fn shapes(&self, m: &RelaxationModel) -> Vec<Complex64> {
        self.data
            .iter()
            .map(|p| continued::spectral(m, Complex64::new(0.0, p.omega)))
            .collect()
    }

    fn residual_cost(&self, z: &[Complex64], epsinf: f64, delta: f64) -> f64 {
        let sum: f64 = self
            .data
            .iter()
            .zip(z)
            .zip(&self.weights)
            .map(|((p, zj), &(wr, wi))| {
                let r = Complex64::new(p.eps_real, p.eps_imag) - epsinf - delta * zj;
                wr * r.re * r.re + wi * r.im * r.im
            })
            .sum();
        sum / self.data.len() as f64
    }

    fn project(&self, z: &[Complex64]) -> Projection {
        // normal equations of the rows [1, Re z]·(ε_∞, Δ) = ε′ and [0, Im z]·(ε_∞, Δ) = ε″
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((p, zj), &(wr, wi)) in self.data.iter().zip(z).zip(&self.weights) {
            a11 += wr;
            a12 += wr * zj.re;
            a22 += wr * zj.re * zj.re + wi * zj.im * zj.im;
            b1 += wr * p.eps_real;
            b2 += wr * zj.re * p.eps_real + wi * zj.im * p.eps_imag;
        }
        let det = a11 * a22 - a12 * a12;
        let (mut epsinf, mut delta) = if det > 1e-14 * a11 * a22 {
            ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det)
        } else {
            (b1 / a11, 0.0)
        };
        if !(delta > 0.0) {
            delta = 1e-12 * (b1 / a11).abs().max(1e-300);
            epsinf = (b1 - delta * a12) / a11;
        }
        Projection {
            epsinf,
            delta,
            cost: self.residual_cost(z, epsinf, delta),
        }
    }

    fn cost(&self, x: &[f64]) -> f64 {
        match model_of(self.kind, x) {
            Ok(m) => {
                let c = self.project(&self.shapes(&m)).cost;
                if c.is_finite() {
                    c
                } else {
                    f64::MAX
                }
            }
            Err(_) => f64::MAX,
        }
    }

    fn result(&self, x: &[f64], iterations: usize, converged: bool) -> crate::Result<FitResult> {
        let model = model_of(self.kind, x)?;
        let z = self.shapes(&model);
        let p = self.project(&z);
        let sq: f64 = self
            .data
            .iter()
            .zip(&z)
            .map(|(d, zj)| (Complex64::new(d.eps_real, d.eps_imag) - p.epsinf - p.delta * zj).norm_sqr())
            .sum();
        Ok(FitResult {
            model,
            eps0: p.epsinf + p.delta,
            epsinf: p.epsinf,
            residual_norm: (sq / self.data.len() as f64).sqrt(),
            iterations,
            converged,
        })
    }
}

struct Minimum {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

/// Nelder-Mead simplex search from `x0` with initial edge lengths `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], tol: f64, max_iterations: usize) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (best, worst) = (values[0], values[n]);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter <= tol && worst - best <= 1e-12 * best.abs() + f64::MIN_POSITIVE {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// Start points stratified along every coordinate of the parameter box.
fn latin_hypercube(kind: ModelKind, data: &[PermittivityPoint], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = layout(kind);
    let (w_lo, w_hi) = (data[0].omega, data[data.len() - 1].omega);
    let columns: Vec<Vec<f64>> = params
        .iter()
        .map(|p| {
            let mut strata: Vec<usize> = (0..count).collect();
            strata.shuffle(&mut rng);
            strata
                .into_iter()
                .map(|k| {
                    let u = (k as f64 + rng.random::<f64>()) / count as f64;
                    if p.is_exponent() {
                        exponent_coordinate(0.2 + 0.8 * u)
                    } else {
                        (1.0 / w_hi).ln() + u * (w_hi / w_lo).ln()
                    }
                })
                .collect()
        })
        .collect();
    (0..count).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// Fits the named model kind to a spectrum by multi-start simplex search.
pub fn fit(kind: ModelKind, data: &[PermittivityPoint], opts: &FitOptions) -> Result<FitResult, CliError> {
    if data.len() < super::data::MIN_ROWS {
        return Err(CliError::Input(format!(
            "need at least {} data rows, found {}",
            super::data::MIN_ROWS,
            data.len()
        )));
    }
    if opts.starts == 0 {
        return Err(CliError::Input("at least one start is needed".into()));
    }
    let span = (data[data.len() - 1].omega / data[0].omega).log10();
    if span < 1.0 {
        log::warn!("data span {span:.2} frequency decades; parameters may be poorly determined");
    }
    let problem = Problem::new(kind, data);
    let steps: Vec<f64> = layout(kind).iter().map(|p| if p.is_exponent() { 0.3 } else { 1.0 }).collect();
    let cost = |x: &[f64]| problem.cost(x);
    let starts = latin_hypercube(kind, data, opts.starts, opts.seed);
    let runs: Vec<Minimum> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let first = nelder_mead(&cost, x0, &steps, opts.tol, opts.max_iterations);
            // a restart from the optimum guards against a collapsed simplex
            let fine: Vec<f64> = steps.iter().map(|s| 0.05 * s).collect();
            let left = opts.max_iterations.saturating_sub(first.iterations);
            let second = nelder_mead(&cost, &first.x, &fine, opts.tol, left);
            log::debug!("start {i}: cost {:e} after {} iterations", second.f, first.iterations + second.iterations);
            Minimum {
                iterations: first.iterations + second.iterations,
                converged: second.converged,
                ..second
            }
        })
        .collect();
    let (_, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    if best.f == f64::MAX {
        return Err(CliError::Core(crate::Error::Numerical("no start produced a valid model".into())));
    }
    let result = problem.result(&best.x, best.iterations, best.converged)?;
    if !(result.eps0 - result.epsinf > 1e-9 * result.eps0.abs()) {
        return Err(CliError::Core(crate::Error::Numerical(
            "the data show no relaxation step (eps0 = epsinf)".into(),
        )));
    }
    Ok(result)
}
