//! Evolution equations for φ and n, fractional operators on uniform grids,
//! and the model-specific equation checks.
//!
//! Both solvers march the relaxation form of their equation, which keeps the
//! unknown continuous even when φ carries a delta or a t^(γ−1) singularity:
//!
//! * φ = BM − B M∗φ becomes 1 − n = B M∗n,
//! * d/dt (k∗φ) = −Bφ becomes (k + B)∗n = ∫₀ᵗ k.
//!
//! The default scheme is product trapezoid with exact cell moments of the
//! kernel, run on h, h/2 and h/4 and extrapolated in two Richardson stages
//! with the exponents 1 + σ and min(1 + 2σ, 2), where n(t) ≈ n(0⁺) − c t^σ.

use crate::analysis::{Domain, GridSummary, PropertyKind, PropertyReport};
use crate::error::{Error, Result};
use crate::laplace::talbot;
use crate::mlf::{ml3, Ml3Params};
use crate::models::{Family, RelaxationModel};
use crate::quad::{tanh_sinh, tanh_sinh_level, GaussRule};
use crate::special::{gamma, rgamma};
use crate::timedomain::{self, GeneralizedFunction, Grid, GridScheme};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

/// Cells next to the kernel singularity integrated adaptively.
const NEAR_CELLS: usize = 16;
const TALBOT_NODES: usize = 32;
const EW_TOLERANCE: f64 = 1e-3;
const JWS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ProductTrapezoid,
    ConvolutionQuadratureOrder1,
    ConvolutionQuadratureOrder2,
}

impl Scheme {
    /// Order expected on the unknown n when n ≈ n(0⁺) − c t^σ.
    pub fn nominal_order(self, sigma: f64, extrapolate: bool) -> f64 {
        match self {
            Scheme::ProductTrapezoid if extrapolate => (1.0 + 2.0 * sigma).min(2.0).max(1.0 + sigma),
            Scheme::ProductTrapezoid => 1.0 + sigma,
            Scheme::ConvolutionQuadratureOrder1 => 1.0,
            Scheme::ConvolutionQuadratureOrder2 => (1.0 + sigma).min(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub grid: Grid,
    pub scheme: Scheme,
    pub tol: f64,
    /// Richardson extrapolation of the product-trapezoid scheme.
    pub extrapolate: bool,
    /// Time window used when solutions are compared; the whole grid when absent.
    pub window: Option<(f64, f64)>,
}

impl SolverSettings {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            scheme: Scheme::ProductTrapezoid,
            tol: 1e-4,
            extrapolate: true,
            window: None,
        }
    }

    /// Uniform grid with `steps` steps on [0, stop].
    pub fn uniform(stop: f64, steps: usize) -> Result<Self> {
        Ok(Self::new(Grid::uniform(0.0, stop, steps)?))
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_window(mut self, from: f64, to: f64) -> Self {
        self.window = Some((from, to));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.scheme() != GridScheme::Uniform || self.grid.first() != 0.0 {
            return Err(Error::InvalidParameter("solvers need a uniform grid starting at t = 0".into()));
        }
        if self.grid.len() < 5 {
            return Err(Error::InvalidParameter("solvers need at least 4 steps".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    fn step(&self) -> f64 {
        self.grid.last() / self.steps() as f64
    }
}

/// Solver output on t₁ … t_N: the regular part of φ, n itself and φ's delta weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub relaxation: Vec<f64>,
    pub delta_weight: f64,
    /// Largest defect of the base-step discrete equation at the returned n.
    pub residual_estimate: f64,
    /// Largest change made by the last extrapolation stage.
    pub error_estimate: f64,
    pub scheme: Scheme,
}

impl Solution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{t:?},{v:?}\n"));
        }
        out
    }
}

/// Cell moments ∫ g and ∫ (v − kh) g over [kh, (k+1)h] for the regular part.
#[derive(Debug, Clone)]
struct Moments {
    h: f64,
    m0: Vec<f64>,
    m1: Vec<f64>,
}

impl Moments {
    fn compute(g: &GeneralizedFunction, h: f64, cells: usize) -> Result<Self> {
        let rule = GaussRule::new(4);
        let rows: Vec<(f64, f64)> = (0..cells)
            .into_par_iter()
            .map(|k| {
                let a = k as f64 * h;
                let b = a + h;
                let failure: Mutex<Option<Error>> = Mutex::new(None);
                let eval = |v: f64| match g.regular(v) {
                    Ok(x) => x,
                    Err(e) => {
                        failure.lock().expect("poisoned").get_or_insert(e);
                        0.0
                    }
                };
                let pair = if k < NEAR_CELLS {
                    let arg = |x: f64, dl: f64| if k == 0 { dl } else { x };
                    let (m0, _) = tanh_sinh(|x, dl, _| eval(arg(x, dl)), a, b, 1e-13)?;
                    let (m1, _) = tanh_sinh(|x, dl, _| dl * eval(arg(x, dl)), a, b, 1e-13)?;
                    (m0, m1)
                } else {
                    (rule.integrate(&eval, a, b), rule.integrate(|v| (v - a) * eval(v), a, b))
                };
                if let Some(e) = failure.into_inner().expect("poisoned") {
                    return Err(e);
                }
                Ok(pair)
            })
            .collect::<Result<_>>()?;
        let (m0, m1) = rows.into_iter().unzip();
        Ok(Self { h, m0, m1 })
    }

    /// Moments on cells of twice the width.
    fn coarsen(&self) -> Self {
        let n = self.m0.len() / 2;
        let mut m0 = Vec::with_capacity(n);
        let mut m1 = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (2 * k, 2 * k + 1);
            m0.push(self.m0[a] + self.m0[b]);
            m1.push(self.m1[a] + self.m1[b] + self.h * self.m0[b]);
        }
        Self { h: 2.0 * self.h, m0, m1 }
    }

    /// Adds the constant c to the kernel.
    fn plus_constant(mut self, c: f64) -> Self {
        for (a, b) in self.m0.iter_mut().zip(self.m1.iter_mut()) {
            *a += c * self.h;
            *b += c * self.h * self.h / 2.0;
        }
        self
    }

    /// Product-trapezoid weights acting on n_j (a0) and n_{j+1} (a1) of each cell.
    fn weights(&self, scale: f64) -> (Vec<f64>, Vec<f64>) {
        let a0: Vec<f64> = self.m1.iter().map(|m1| scale * m1 / self.h).collect();
        let a1: Vec<f64> = self.m0.iter().zip(&self.m1).map(|(m0, m1)| scale * (m0 - m1 / self.h)).collect();
        (a0, a1)
    }
}

/// Convolution term Σ over cells of the piecewise-linear n, excluding n_i's own weight.
fn history(n: &[f64], a0: &[f64], a1: &[f64], i: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..i {
        s += n[j] * a0[i - 1 - j];
    }
    for m in 1..i {
        s += n[m] * a1[i - m];
    }
    s
}

/// Solves diag·n_i + history_i + a1[0]·n_i = rhs_i for i ≥ 1 with n_0 given.
fn march(diag: f64, a0: &[f64], a1: &[f64], rhs: &[f64], n0: f64) -> Result<Vec<f64>> {
    let steps = rhs.len() - 1;
    let mut n = vec![0.0; steps + 1];
    n[0] = n0;
    let pivot = diag + a1[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Numerical("singular starting weight in the marching scheme".into()));
    }
    for i in 1..=steps {
        n[i] = (rhs[i] - history(&n, a0, a1, i)) / pivot;
        if !n[i].is_finite() || n[i].abs() > 1e3 {
            return Err(Error::Numerical(format!(
                "marching scheme became unstable at step {i} (value {})",
                n[i]
            )));
        }
    }
    Ok(n)
}

fn defect(diag: f64, a0: &[f64], a1: &[f64], rhs: &[f64], n: &[f64]) -> f64 {
    (1..n.len())
        .map(|i| ((diag + a1[0]) * n[i] + history(n, a0, a1, i) - rhs[i]).abs())
        .fold(0.0, f64::max)
}

/// Which form of the evolution equation is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Integral,
    IntegroDifferential,
}

struct Problem<'a> {
    kernel: &'a GeneralizedFunction,
    rate: f64,
    form: Form,
}

impl Problem<'_> {
    fn check(&self) -> Result<()> {
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidParameter(format!("B must be positive, got {}", self.rate)));
        }
        let g = self.kernel;
        if !(g.sing_exponent > 0.0 && g.sing_exponent <= 1.0) {
            return Err(Error::InvalidParameter("kernel must be integrable (singular exponent in (0, 1])".into()));
        }
        if self.form == Form::IntegroDifferential && g.delta_weight == 0.0 && g.sing_coefficient == 0.0 {
            return Err(Error::InvalidParameter(
                "k must carry a delta or a nonzero value at t = 0⁺".into(),
            ));
        }
        Ok(())
    }

    /// n(0⁺) from the delta algebra at t → 0⁺.
    fn start(&self) -> f64 {
        let g = self.kernel;
        match self.form {
            Form::Integral => 1.0 / (1.0 + self.rate * g.delta_weight),
            Form::IntegroDifferential => {
                if g.delta_weight != 0.0 || g.sing_exponent < 1.0 {
                    1.0
                } else {
                    g.sing_coefficient / (g.sing_coefficient + self.rate)
                }
            }
        }
    }

    /// Exponent σ of the leading non-smooth term of n.
    fn sigma(&self) -> f64 {
        let g = self.kernel;
        let singular = g.sing_coefficient != 0.0 && g.sing_exponent < 1.0;
        match self.form {
            Form::Integral if g.delta_weight == 0.0 && singular => g.sing_exponent,
            Form::IntegroDifferential if g.delta_weight == 0.0 && singular => 1.0 - g.sing_exponent,
            _ => 1.0,
        }
    }

    fn discretize(&self, moments: &Moments, steps: usize) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let b = self.rate;
        match self.form {
            Form::Integral => {
                let (a0, a1) = moments.weights(b);
                (1.0 + b * self.kernel.delta_weight, a0, a1, vec![1.0; steps + 1])
            }
            Form::IntegroDifferential => {
                let w = self.kernel.delta_weight;
                let mut rhs = Vec::with_capacity(steps + 1);
                let mut acc = 0.0;
                rhs.push(w);
                for c in 0..steps {
                    acc += moments.m0[c];
                    rhs.push(w + acc);
                }
                let (a0, a1) = moments.clone().plus_constant(b).weights(1.0);
                (w, a0, a1, rhs)
            }
        }
    }

    /// A k without delta leaves a first-kind equation, on which the trapezoid
    /// rule adds an error alternating in sign between nodes.
    fn first_kind(&self) -> bool {
        self.form == Form::IntegroDifferential && self.kernel.delta_weight == 0.0
    }

    /// φ at the coarse nodes from the n of one level, for the integral form.
    fn response_from_memory(&self, n: &[f64], moments: &Moments, stride: usize, m_nodes: &[f64]) -> Vec<f64> {
        let b = self.rate;
        let scale = 1.0 + b * self.kernel.delta_weight;
        let h = moments.h;
        (1..m_nodes.len())
            .map(|i| {
                let top = i * stride;
                let mut s = 0.0;
                for c in 0..top {
                    s += (n[top - c] - n[top - c - 1]) * moments.m0[c];
                }
                (b * m_nodes[i] * n[0] + b * s / h) / scale
            })
            .collect()
    }
}

/// (1, 2, 1)/4 filter, which removes a (−1)^i component; the last node is extrapolated.
fn smooth_alternation(n: &[f64]) -> Vec<f64> {
    let len = n.len();
    let mut out = n.to_vec();
    for i in 1..len - 1 {
        out[i] = 0.25 * (n[i - 1] + 2.0 * n[i] + n[i + 1]);
    }
    out[len - 1] = 3.0 * out[len - 2] - 3.0 * out[len - 3] + out[len - 4];
    out
}

fn richardson(coarse: &[f64], fine: &[f64], p: f64) -> Vec<f64> {
    let r = 2f64.powf(p);
    coarse.iter().zip(fine).map(|(c, f)| (r * f - c) / (r - 1.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fourth-order differences of n on a uniform grid; entry 0 is unused. When
/// n(0) − n ~ t^σ with σ < 1 the first two nodes differentiate a local fit on
/// t^σ, t^(2σ), t^(3σ) instead.
fn negative_derivative(n: &[f64], h: f64, sigma: f64) -> Vec<f64> {
    let len = n.len();
    let mut d = vec![0.0; len];
    for i in 1..len {
        d[i] = if i >= 2 && i + 2 < len {
            (n[i - 2] - 8.0 * n[i - 1] + 8.0 * n[i + 1] - n[i + 2]) / (12.0 * h)
        } else if i < 2 {
            (-3.0 * n[0] - 10.0 * n[1] + 18.0 * n[2] - 6.0 * n[3] + n[4]) / (12.0 * h)
        } else if i + 1 < len {
            (-n[i - 3] + 6.0 * n[i - 2] - 18.0 * n[i - 1] + 10.0 * n[i] + 3.0 * n[i + 1]) / (12.0 * h)
        } else {
            (3.0 * n[i - 4] - 16.0 * n[i - 3] + 36.0 * n[i - 2] - 48.0 * n[i - 1] + 25.0 * n[i]) / (12.0 * h)
        };
    }
    if sigma < 1.0 {
        if let Some(c) = power_fit(n, sigma) {
            for (i, di) in d.iter_mut().enumerate().take(3).skip(1) {
                let x = i as f64;
                // d/dt of n(0) − Σ c_k (t/h)^(kσ)
                let slope: f64 = (1..=3).map(|k| c[k - 1] * k as f64 * sigma * x.powf(k as f64 * sigma - 1.0)).sum();
                *di = -slope / h;
            }
        }
    }
    d.iter().map(|v| -v).collect()
}

/// Coefficients of n(0) − n(ih) = Σ_k c_k i^(kσ) through i = 1, 2, 3.
fn power_fit(n: &[f64], sigma: f64) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for (r, row) in a.iter_mut().enumerate() {
        let x = (r + 1) as f64;
        for k in 0..3 {
            row[k] = x.powf((k + 1) as f64 * sigma);
        }
        row[3] = n[0] - n[r + 1];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        a.swap(col, piv);
        if a[col][col] == 0.0 {
            return None;
        }
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for k in col..4 {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut c = [0.0; 3];
    for r in (0..3).rev() {
        let tail: f64 = (r + 1..3).map(|k| a[r][k] * c[k]).sum();
        c[r] = (a[r][3] - tail) / a[r][r];
    }
    c.iter().all(|v| v.is_finite()).then_some(c)
}

fn solve(problem: Problem<'_>, cfg: &SolverSettings) -> Result<Solution> {
    cfg.validate()?;
    problem.check()?;
    match cfg.scheme {
        Scheme::ProductTrapezoid => solve_product_trapezoid(&problem, cfg),
        Scheme::ConvolutionQuadratureOrder1 => solve_cq(&problem, cfg, 1),
        Scheme::ConvolutionQuadratureOrder2 => solve_cq(&problem, cfg, 2),
    }
}

fn solve_product_trapezoid(problem: &Problem<'_>, cfg: &SolverSettings) -> Result<Solution> {
    let steps = cfg.steps();
    let h = cfg.step();
    let levels = if cfg.extrapolate { 3 } else { 1 };
    let finest = 1usize << (levels - 1);
    let n0 = problem.start();
    let mut moments = vec![Moments::compute(problem.kernel, h / finest as f64, steps * finest)?];
    for _ in 1..levels {
        let next = moments.last().expect("non-empty").coarsen();
        moments.push(next);
    }
    moments.reverse();

    let m_nodes: Vec<f64> = if problem.form == Form::Integral {
        let mut v = vec![0.0];
        v.extend(
            cfg.grid.nodes()[1..]
                .par_iter()
                .map(|&t| problem.kernel.regular(t))
                .collect::<Result<Vec<_>>>()?,
        );
        v
    } else {
        Vec::new()
    };

    let mut relax = Vec::with_capacity(levels);
    let mut resp = Vec::with_capacity(levels);
    let mut base = None;
    for (l, mo) in moments.iter().enumerate() {
        let stride = 1usize << l;
        let (diag, a0, a1, rhs) = problem.discretize(mo, steps * stride);
        let mut n = march(diag, &a0, &a1, &rhs, n0)?;
        if problem.first_kind() {
            n = smooth_alternation(&n);
        }
        if problem.form == Form::Integral {
            resp.push(problem.response_from_memory(&n, mo, stride, &m_nodes));
        }
        relax.push(n.iter().step_by(stride).copied().collect::<Vec<f64>>());
        if l == 0 {
            base = Some((diag, a0, a1, rhs));
        }
    }

    let sigma = problem.sigma();
    let p1 = 1.0 + sigma;
    let p2 = if sigma < 1.0 { (1.0 + 2.0 * sigma).min(2.0) } else { 3.0 };
    let extrapolate = |s: &[Vec<f64>]| -> (Vec<f64>, f64) {
        if s.len() == 1 {
            return (s[0].clone(), 0.0);
        }
        let r1a = richardson(&s[0], &s[1], p1);
        let r1b = richardson(&s[1], &s[2], p1);
        let r2 = richardson(&r1a, &r1b, p2);
        let change = max_abs_diff(&r2, &r1b);
        (r2, change)
    };
    let (n, err_n) = extrapolate(&relax);
    let (values, err_phi) = if problem.form == Form::Integral {
        extrapolate(&resp)
    } else {
        let phi = negative_derivative(&n, h, sigma);
        (phi[1..].to_vec(), 0.0)
    };
    let (diag, a0, a1, rhs) = base.expect("base level");
    let residual_estimate = defect(diag, &a0, &a1, &rhs, &n);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("solver produced non-finite values".into()));
    }
    let grid = Grid::from_nodes(cfg.grid.nodes()[1..].to_vec(), GridScheme::Uniform)?;
    Ok(Solution {
        grid,
        values,
        relaxation: n[1..].to_vec(),
        delta_weight: 1.0 - n0,
        residual_estimate,
        error_estimate: err_n.max(err_phi),
        scheme: cfg.scheme,
    })
}

/// Convolution-quadrature weights of a transform for backward Euler or BDF2.
fn cq_weights(g: &dyn Fn(Complex64) -> Complex64, steps: usize, h: f64, order: u8) -> Vec<f64> {
    let len = 8 * (steps + 1);
    let rho = (1e-14f64).powf(1.0 / len as f64);
    let mut buf: Vec<Complex64> = (0..len)
        .map(|l| {
            let z = Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * l as f64 / len as f64);
            let d = if order == 1 { 1.0 - z } else { (1.0 - z) + 0.5 * (1.0 - z) * (1.0 - z) };
            g(d / h)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut buf);
    (0..=steps)
        .map(|j| buf[j].re / len as f64 * rho.powi(-(j as i32)))
        .collect()
}

fn solve_cq(problem: &Problem<'_>, cfg: &SolverSettings, order: u8) -> Result<Solution> {
    let kernel = problem.kernel;
    if !kernel.has_transform() {
        return Err(Error::InvalidParameter("convolution quadrature needs the kernel transform".into()));
    }
    let steps = cfg.steps();
    let h = cfg.step();
    let b = problem.rate;
    let khat = |s: Complex64| kernel.transform(s).expect("checked");
    // n = n(0⁺) + u with u(0) = 0; the constant part is convolved exactly
    let n0 = problem.start();
    let cumulative: Vec<f64> = cfg
        .grid
        .nodes()
        .par_iter()
        .map(|&t| if t == 0.0 { Ok(0.0) } else { talbot(|s| khat(s) / s, t, TALBOT_NODES) })
        .collect::<Result<_>>()?;
    let mut u = vec![0.0; steps + 1];
    match problem.form {
        Form::Integral => {
            let w = cq_weights(&khat, steps, h, order);
            for i in 1..=steps {
                let s: f64 = (1..i).map(|j| w[i - j] * u[j]).sum();
                u[i] = (1.0 - n0 - b * n0 * cumulative[i] - b * s) / (1.0 + b * w[0]);
            }
        }
        Form::IntegroDifferential => {
            let w = cq_weights(&|s| khat(s) + b / s, steps, h, order);
            for i in 1..=steps {
                let t = cfg.grid.nodes()[i];
                let s: f64 = (1..i).map(|j| w[i - j] * u[j]).sum();
                u[i] = (cumulative[i] * (1.0 - n0) - n0 * b * t - s) / w[0];
            }
        }
    }
    let n: Vec<f64> = u.iter().map(|v| n0 + v).collect();
    if n.iter().any(|v| !v.is_finite() || v.abs() > 1e3) {
        return Err(Error::Numerical("convolution quadrature became unstable".into()));
    }
    let phi = negative_derivative(&n, h, problem.sigma());
    let grid = Grid::from_nodes(cfg.grid.nodes()[1..].to_vec(), GridScheme::Uniform)?;
    Ok(Solution {
        grid,
        values: phi[1..].to_vec(),
        relaxation: n[1..].to_vec(),
        delta_weight: 1.0 - n0,
        residual_estimate: 0.0,
        error_estimate: 0.0,
        scheme: cfg.scheme,
    })
}

/// Solves φ = BM − B M∗φ.
pub fn solve_integral_eq(m: &GeneralizedFunction, rate: f64, cfg: &SolverSettings) -> Result<Solution> {
    solve(
        Problem {
            kernel: m,
            rate,
            form: Form::Integral,
        },
        cfg,
    )
}

/// Solves d/dt ∫₀ᵗ k(t−ξ)φ(ξ)dξ = −Bφ with n(0) = 1.
pub fn solve_integrodiff_eq(k: &GeneralizedFunction, rate: f64, cfg: &SolverSettings) -> Result<Solution> {
    solve(
        Problem {
            kernel: k,
            rate,
            form: Form::IntegroDifferential,
        },
        cfg,
    )
}

fn window_mask(grid: &Grid, window: Option<(f64, f64)>) -> Vec<bool> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    grid.nodes().iter().map(|&t| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)).collect()
}

/// Largest relative deviation of a solution from a reference response inside the window.
pub fn compare_with(
    sol: &Solution,
    reference: &(dyn Fn(f64) -> Result<f64> + Sync),
    window: Option<(f64, f64)>,
) -> Result<Vec<(f64, f64)>> {
    let mask = window_mask(&sol.grid, window);
    sol.grid
        .nodes()
        .par_iter()
        .zip(&sol.values)
        .zip(&mask)
        .filter(|(_, &keep)| keep)
        .map(|((&t, &v), _)| {
            let r = reference(t)?;
            Ok((t, (v - r).abs() / r.abs().max(f64::MIN_POSITIVE)))
        })
        .collect()
}

/// Runs both solvers for a model and reports their largest relative disagreement.
pub fn verify_equivalence(m: &RelaxationModel, cfg: &SolverSettings) -> Result<PropertyReport> {
    m.validate()?;
    let a = solve_integral_eq(&timedomain::kernel_m(m)?, m.rate, cfg)?;
    let b = solve_integrodiff_eq(&timedomain::kernel_k(m)?, m.rate, cfg)?;
    let mask = window_mask(&a.grid, cfg.window);
    let delta_gap = (a.delta_weight - b.delta_weight).abs();
    let v: Vec<(f64, f64)> = a
        .grid
        .nodes()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .zip(&mask)
        .filter(|(_, &keep)| keep)
        .map(|((&t, (&x, &y)), _)| (t, (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE) + delta_gap))
        .collect();
    let mut grid = GridSummary::of(&a.grid, Domain::Time);
    if let Some((lo, hi)) = cfg.window {
        grid.start = grid.start.max(lo);
        grid.stop = grid.stop.min(hi);
        grid.count = v.len();
    }
    Ok(PropertyReport::from_violations(
        PropertyKind::SolverEquivalence,
        format!("{} integral vs integro-differential form", m.kind),
        grid,
        cfg.tol,
        &v,
    ))
}

fn check_sampled(grid: &Grid, f: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if grid.scheme() != GridScheme::Uniform || grid.first() != 0.0 {
        return Err(Error::InvalidParameter("fractional operators need a uniform grid from t = 0".into()));
    }
    if f.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} grid nodes",
            f.len(),
            grid.len()
        )));
    }
    Ok(grid.last() / (grid.len() - 1) as f64)
}

/// (k+1)^p − k^p without cancellation.
fn power_step(k: usize, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
}

/// Riemann-Liouville integral of order α by product trapezoid.
pub fn frac_integral(grid: &Grid, f: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let h = check_sampled(grid, f, alpha)?;
    let p = alpha + 1.0;
    // b_k = (k+1)^p − 2k^p + (k−1)^p for k ≥ 1
    let b: Vec<f64> = (0..f.len())
        .map(|k| if k == 0 { 0.0 } else { power_step(k, p) - power_step(k - 1, p) })
        .collect();
    let c = h.powf(alpha) * rgamma(alpha + 2.0);
    Ok((0..f.len())
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            let nf = n as f64;
            let mut s = ((nf - 1.0).powf(p) - (nf - alpha - 1.0) * nf.powf(alpha)) * f[0] + f[n];
            for j in 1..n {
                s += b[n - j] * f[j];
            }
            c * s
        })
        .collect())
}

fn gradient(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h)
            } else {
                (g[i + 1] - g[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Riemann-Liouville derivative d/dt I^(1−α) f. Entry 0 is a one-sided
/// estimate and is meaningless when f(0) ≠ 0.
pub fn frac_deriv_rl(grid: &Grid, f: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let h = check_sampled(grid, f, alpha)?;
    let g = frac_integral(grid, f, 1.0 - alpha)?;
    Ok(gradient(&g, h))
}

/// Caputo derivative I^(1−α) f′ with f piecewise linear (L1 scheme).
pub fn frac_deriv_caputo(grid: &Grid, f: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let h = check_sampled(grid, f, alpha)?;
    let q = 1.0 - alpha;
    let w: Vec<f64> = (0..f.len()).map(|k| power_step(k, q)).collect();
    let c = h.powf(-alpha) * rgamma(2.0 - alpha);
    Ok((0..f.len())
        .map(|n| {
            let mut s = 0.0;
            for j in 0..n {
                s += (f[j + 1] - f[j]) * w[n - 1 - j];
            }
            c * s
        })
        .collect())
}

/// Uniform grid on [0, t_last] sharing the step of `t_grid`, and the index of t_grid's first node.
fn extend_to_origin(t_grid: &Grid) -> Result<(Grid, usize)> {
    if t_grid.scheme() != GridScheme::Uniform {
        return Err(Error::InvalidParameter("the check grid must be uniform".into()));
    }
    let h = (t_grid.last() - t_grid.first()) / (t_grid.len() - 1) as f64;
    let offset = t_grid.first() / h;
    let k = offset.round();
    if (offset - k).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "the first node {} must be a whole number of steps {h} from 0",
            t_grid.first()
        )));
    }
    let k = k as usize;
    let full = Grid::uniform(0.0, t_grid.last(), k + t_grid.len() - 1)?;
    Ok((full, k))
}

/// τ₁n′ + τ₂^α ₀D_t^α n + n on the grid, for given samples of n.
pub fn ew_equation_residual_samples(
    m: &RelaxationModel,
    t_grid: &Grid,
    n: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<PropertyReport> {
    m.validate()?;
    if m.family() != Family::Ew {
        return Err(Error::InvalidParameter("the fractional equation check needs the excess-wing model".into()));
    }
    if m.alpha >= 1.0 {
        return Err(Error::InvalidParameter("the fractional equation check needs alpha < 1".into()));
    }
    let (full, first) = extend_to_origin(t_grid)?;
    let h = full.last() / (full.len() - 1) as f64;
    let samples: Vec<f64> = full.nodes().par_iter().map(|&t| n(t)).collect::<Result<_>>()?;
    let d_alpha = frac_deriv_rl(&full, &samples, m.alpha)?;
    let dn = gradient(&samples, h);
    let ta = m.tau2.powf(m.alpha);
    let rows: Vec<(f64, f64, f64)> = (first..full.len())
        .map(|i| {
            let terms = [m.tau1 * dn[i], ta * d_alpha[i], samples[i]];
            let scale = terms.iter().map(|v| v.abs()).fold(0.0, f64::max);
            (full.nodes()[i], terms.iter().sum::<f64>().abs(), scale)
        })
        .collect();
    let scale = rows.iter().map(|r| r.2).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let v: Vec<(f64, f64)> = rows.iter().map(|&(t, r, _)| (t, r / scale)).collect();
    Ok(PropertyReport::from_violations(
        PropertyKind::EquationResidual,
        format!("{} tau1 n' + tau2^alpha D^alpha n + n = 0", m.kind),
        GridSummary::of(t_grid, Domain::Time),
        EW_TOLERANCE,
        &v,
    ))
}

/// The excess-wing fractional equation evaluated on the closed-form n.
pub fn ew_equation_residual(m: &RelaxationModel, t_grid: &Grid) -> Result<PropertyReport> {
    let mm = *m;
    ew_equation_residual_samples(m, t_grid, &move |t| timedomain::relaxation(&mm, t))
}

/// u^(−αβ)[E^{−β}_{α,1−αβ}(−(u/τ)^α) − 1/Γ(1−αβ)].
fn jws_kernel_tail(m: &RelaxationModel, u: f64) -> Result<f64> {
    let (a, b) = (m.alpha, m.beta);
    let mu = 1.0 - a * b;
    let x = (u / m.tau).powf(a);
    let value = if x < 1.0 {
        let mut sum = 0.0;
        let mut c = 1.0; // (−β)_r (−x)^r / r!
        for r in 1..200 {
            let rf = r as f64;
            c *= (-b + rf - 1.0) * (-x) / rf;
            let term = c * rgamma(mu + a * rf);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() && r > 2 {
                break;
            }
        }
        sum
    } else {
        ml3(Ml3Params::new(a, mu, -b)?, -x)? - rgamma(mu)
    };
    Ok(u.powf(-a * b) * value)
}

enum IdentityRule {
    Adaptive,
    Level(i32),
}

fn jws_identity(m: &RelaxationModel, t_grid: &Grid, rule: IdentityRule) -> Result<PropertyReport> {
    m.validate()?;
    if m.family() != Family::Jws {
        return Err(Error::InvalidParameter("the convolution identity needs the JWS model".into()));
    }
    if !(t_grid.first() > 0.0) {
        return Err(Error::Domain("the convolution identity is checked at t > 0".into()));
    }
    let phi = timedomain::response(m)?;
    let ab = m.alpha * m.beta;
    // at αβ = 1 the leading term u^(−αβ)/Γ(1−αβ) is the unit delta
    let lead_delta = ab == 1.0;
    let g_lead = if lead_delta { 0.0 } else { 1.0 / gamma(1.0 - ab) };
    let v: Vec<(f64, f64)> = t_grid
        .nodes()
        .par_iter()
        .map(|&t| {
            let failure: Mutex<Option<Error>> = Mutex::new(None);
            let keep = |r: Result<f64>| match r {
                Ok(x) => x,
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    f64::NAN
                }
            };
            let integrand = |_: f64, dl: f64, dr: f64| {
                let kernel = g_lead * dr.powf(-ab) + keep(jws_kernel_tail(m, dr));
                kernel * keep(phi.regular(dl))
            };
            let mut lhs = match rule {
                IdentityRule::Adaptive => tanh_sinh(integrand, 0.0, t, 1e-12)?.0,
                IdentityRule::Level(l) => tanh_sinh_level(integrand, 0.0, t, l),
            };
            if let Some(e) = failure.into_inner().expect("poisoned") {
                return Err(e);
            }
            if lead_delta {
                lhs += phi.regular(t)?;
            }
            if phi.delta_weight != 0.0 {
                lhs += phi.delta_weight * (g_lead * t.powf(-ab) + jws_kernel_tail(m, t)?);
            }
            let rhs = jws_kernel_tail(m, t)?;
            Ok((t, (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)))
        })
        .collect::<Result<_>>()?;
    Ok(PropertyReport::from_violations(
        PropertyKind::ConvolutionIdentity,
        format!("{} kernel convolution identity", m.kind),
        GridSummary::of(t_grid, Domain::Time),
        JWS_TOLERANCE,
        &v,
    ))
}

/// ∫₀ᵗ K(t−ξ)φ(ξ)dξ = K(t) − t^(−αβ)/Γ(1−αβ) with K(u) = u^(−αβ)E^{−β}_{α,1−αβ}(−(u/τ)^α).
pub fn jws_convolution_identity(m: &RelaxationModel, t_grid: &Grid) -> Result<PropertyReport> {
    jws_identity(m, t_grid, IdentityRule::Adaptive)
}

/// The same identity with the quadrature held at a fixed step 2^(−level−1).
pub fn jws_convolution_identity_at_level(m: &RelaxationModel, t_grid: &Grid, level: i32) -> Result<PropertyReport> {
    jws_identity(m, t_grid, IdentityRule::Level(level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlf::ml3;

    fn max_rel(sol: &Solution, f: &(dyn Fn(f64) -> Result<f64> + Sync), from: f64, to: f64) -> f64 {
        compare_with(sol, f, Some((from, to)))
            .unwrap()
            .iter()
            .map(|r| r.1)
            .fold(0.0, f64::max)
    }

    #[test]
    fn debye_both_forms() {
        let d = RelaxationModel::debye(1.0).unwrap();
        let cfg = SolverSettings::uniform(5.0, 512).unwrap();
        let exact = |t: f64| Ok((-t).exp());
        let a = solve_integral_eq(&timedomain::kernel_m(&d).unwrap(), 1.0, &cfg).unwrap();
        assert!(max_rel(&a, &exact, 0.0, 5.0) < 1e-6);
        let b = solve_integrodiff_eq(&timedomain::kernel_k(&d).unwrap(), 1.0, &cfg).unwrap();
        assert!(max_rel(&b, &exact, 0.0, 5.0) < 1e-6);
        assert_eq!(a.delta_weight, 0.0);
        assert!(a.residual_estimate >= 0.0);
    }

    #[test]
    fn cole_cole_both_forms() {
        let cc = RelaxationModel::cole_cole(0.5, 1.0).unwrap();
        let cfg = SolverSettings::uniform(5.0, 1024).unwrap();
        let p = Ml3Params::new(0.5, 0.5, 1.0).unwrap();
        let exact = move |t: f64| Ok(t.powf(-0.5) * ml3(p, -t.sqrt())?);
        let a = solve_integral_eq(&timedomain::kernel_m(&cc).unwrap(), 1.0, &cfg).unwrap();
        assert!(max_rel(&a, &exact, 0.05, 5.0) < 1e-4);
        let b = solve_integrodiff_eq(&timedomain::kernel_k(&cc).unwrap(), 1.0, &cfg).unwrap();
        assert!(max_rel(&b, &exact, 0.05, 5.0) < 1e-4);
    }

    #[test]
    fn jws_solution_has_no_net_delta() {
        let j = RelaxationModel::jws(0.5, 0.5, 1.0).unwrap();
        let cfg = SolverSettings::uniform(5.0, 512).unwrap();
        let a = solve_integral_eq(&timedomain::kernel_m(&j).unwrap(), j.rate, &cfg).unwrap();
        assert_eq!(a.delta_weight, 0.0);
        let mm = j;
        let exact = move |t: f64| timedomain::response(&mm)?.regular(t);
        assert!(max_rel(&a, &exact, 0.1, 5.0) < 1e-4);
    }

    #[test]
    fn ew_unit_exponent_recovers_delta() {
        let ew = RelaxationModel::excess_wing(1.0, 1.0, 1.0).unwrap();
        let cfg = SolverSettings::uniform(5.0, 256).unwrap();
        let a = solve_integral_eq(&timedomain::kernel_m(&ew).unwrap(), ew.rate, &cfg).unwrap();
        let b = solve_integrodiff_eq(&timedomain::kernel_k(&ew).unwrap(), ew.rate, &cfg).unwrap();
        assert!((a.delta_weight - 0.5).abs() < 1e-14);
        assert!((b.delta_weight - 0.5).abs() < 1e-14);
        let exact = |t: f64| Ok(0.25 * (-t / 2.0).exp());
        let (ea, eb) = (max_rel(&a, &exact, 0.05, 5.0), max_rel(&b, &exact, 0.05, 5.0));
        assert!(ea < 1e-6 && eb < 1e-6, "{ea} {eb}");
    }

    #[test]
    fn convolution_quadrature_is_first_order() {
        let d = RelaxationModel::debye(1.0).unwrap();
        let m = timedomain::kernel_m(&d).unwrap();
        let err = |steps| {
            let cfg = SolverSettings::uniform(2.0, steps)
                .unwrap()
                .with_scheme(Scheme::ConvolutionQuadratureOrder1);
            let s = solve_integral_eq(&m, 1.0, &cfg).unwrap();
            max_abs_diff(
                &s.relaxation,
                &s.grid.nodes().iter().map(|t| (-t).exp()).collect::<Vec<_>>(),
            )
        };
        let (e1, e2) = (err(128), err(256));
        assert!(e1 / e2 > 1.8 && e1 / e2 < 2.2, "{e1} {e2}");
        let cfg = SolverSettings::uniform(2.0, 256).unwrap().with_scheme(Scheme::ConvolutionQuadratureOrder2);
        let s = solve_integral_eq(&m, 1.0, &cfg).unwrap();
        let e = max_abs_diff(&s.relaxation, &s.grid.nodes().iter().map(|t| (-t).exp()).collect::<Vec<_>>());
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn settings_validation() {
        let log = Grid::logarithmic(0.1, 1.0, 10).unwrap();
        assert!(SolverSettings::new(log).validate().is_err());
        let g = Grid::uniform(0.5, 1.0, 10).unwrap();
        assert!(SolverSettings::new(g).validate().is_err());
        let cfg = SolverSettings::uniform(1.0, 16).unwrap();
        assert!(solve_integral_eq(&GeneralizedFunction::constant(1.0), -1.0, &cfg).is_err());
    }

    #[test]
    fn solution_csv() {
        let cfg = SolverSettings::uniform(1.0, 4).unwrap();
        let s = solve_integral_eq(&GeneralizedFunction::constant(1.0), 1.0, &cfg).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("t,value\n0.25,"));
        assert_eq!(csv.lines().count(), 5);
    }

    fn uniform(stop: f64, steps: usize) -> Grid {
        Grid::uniform(0.0, stop, steps).unwrap()
    }

    #[test]
    fn fractional_integral_power_rule() {
        let g = uniform(1.0, 200);
        let one = vec![1.0; g.len()];
        let i = frac_integral(&g, &one, 0.5).unwrap();
        for (t, v) in g.nodes().iter().zip(&i) {
            assert!((v - t.sqrt() / gamma(1.5)).abs() < 1e-13);
        }
        let lin: Vec<f64> = g.nodes().to_vec();
        let i = frac_integral(&g, &lin, 0.5).unwrap();
        let t: f64 = 1.0;
        assert!((i[200] - t.powf(1.5) / gamma(2.5)).abs() < 1e-13);
    }

    #[test]
    fn fractional_integral_of_exponential() {
        // adaptive quadrature of the defining integral as oracle
        let (oracle, _) = tanh_sinh(|_, dl, dr| dr.powf(-0.7) * (-dl).exp(), 0.0, 1.0, 1e-14).unwrap();
        let oracle = oracle / gamma(0.3);
        let g = uniform(1.0, 1000);
        let f: Vec<f64> = g.nodes().iter().map(|t| (-t).exp()).collect();
        let i = frac_integral(&g, &f, 0.3).unwrap();
        assert!((i[1000] - oracle).abs() < 1e-6, "{} {oracle}", i[1000]);
    }

    #[test]
    fn riemann_liouville_and_caputo() {
        let g = uniform(1.0, 400);
        let lin: Vec<f64> = g.nodes().to_vec();
        let d = frac_deriv_rl(&g, &lin, 0.5).unwrap();
        let c = frac_deriv_caputo(&g, &lin, 0.5).unwrap();
        let want = |t: f64| t.sqrt() / gamma(1.5);
        for i in [100, 200, 400] {
            let t = g.nodes()[i];
            // second-order outer difference of I^(1/2) t
            assert!((d[i] - want(t)).abs() < 1e-5, "{i} {} {}", d[i], want(t));
            assert!((c[i] - want(t)).abs() < 1e-12);
        }
        let constant = vec![2.0; g.len()];
        let d = frac_deriv_rl(&g, &constant, 0.5).unwrap();
        let c = frac_deriv_caputo(&g, &constant, 0.5).unwrap();
        let t = g.nodes()[200];
        assert!((d[200] - 2.0 / (t.sqrt() * gamma(0.5))).abs() < 1e-4 * d[200]);
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(frac_integral(&g, &lin, 1.0).is_err());
    }

    #[test]
    fn ew_residual_and_negative_control() {
        let ew = RelaxationModel::excess_wing(0.5, 1.0, 1.0).unwrap();
        let g = Grid::uniform(0.1, 5.0, 49 * 32).unwrap();
        let r = ew_equation_residual(&ew, &g).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = ew_equation_residual_samples(&ew, &g, &|_| Ok(1.0)).unwrap();
        assert!(!r.passed());
        let off = Grid::uniform(0.13, 5.0, 49).unwrap();
        assert!(ew_equation_residual(&ew, &off).is_err());
    }

    #[test]
    fn jws_identity_examples() {
        let j = RelaxationModel::jws(0.5, 0.5, 1.0).unwrap();
        let g = Grid::from_nodes(vec![1e-3, 0.5, 1.0, 3.0], GridScheme::Logarithmic).unwrap();
        let r = jws_convolution_identity(&j, &g).unwrap();
        assert!(r.passed(), "{r:?}");
        let d = RelaxationModel::jws(1.0, 1.0, 1.0).unwrap();
        let r = jws_convolution_identity(&d, &g).unwrap();
        assert!(r.max_violation < 1e-6, "{r:?}");
    }
}
