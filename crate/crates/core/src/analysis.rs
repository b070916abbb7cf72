//! Sampled checks of complete monotonicity, Stieltjes and Bernstein structure,
//! Sonine pairing, URL slopes and the φ = −ṅ relation.
//!
//! These checks can falsify a property on the sampled grid; they never prove it.

use crate::error::{Error, Result};
use crate::models::{self, Family, RelaxationModel};
use crate::quad::tanh_sinh;
use crate::timedomain::{self, GeneralizedFunction, Grid, GridScheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

pub const DEFAULT_MAX_ORDER: usize = 4;
/// Allowed sign violation relative to the natural size n!·|F|/sⁿ of the n-th derivative.
pub const SIGN_TOLERANCE: f64 = 1e-6;
pub const SONINE_TOLERANCE: f64 = 1e-4;
pub const URL_TOLERANCE: f64 = 0.02;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
const MAX_WITNESSES: usize = 16;
const URL_POINTS: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertyKind {
    #[serde(rename = "CMF")]
    Cmf,
    #[serde(rename = "SF")]
    Sf,
    #[serde(rename = "CBF")]
    Cbf,
    SonineUnit,
    MonotoneDecreasing,
    Nonnegative,
    UrlSlope,
    DerivativeRelation,
    SolverEquivalence,
    EquationResidual,
    ConvolutionIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

/// Where a check was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub domain: Domain,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scheme: GridScheme,
}

impl GridSummary {
    pub fn of(grid: &Grid, domain: Domain) -> Self {
        Self {
            domain,
            start: grid.first(),
            stop: grid.last(),
            count: grid.len(),
            scheme: grid.scheme(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub location: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: PropertyKind,
    pub subject: String,
    pub grid: GridSummary,
    pub max_violation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
}

impl PropertyReport {
    /// Builds a report from per-location violations; NaN counts as an infinite violation.
    pub fn from_violations(
        property: PropertyKind,
        subject: impl Into<String>,
        grid: GridSummary,
        tolerance: f64,
        violations: &[(f64, f64)],
    ) -> Self {
        let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
        let max_violation = violations.iter().map(|&(_, v)| clean(v)).fold(0.0, f64::max);
        let mut failing: Vec<Witness> = violations
            .iter()
            .filter(|&&(_, v)| clean(v) > tolerance)
            .map(|&(location, value)| Witness { location, value })
            .collect();
        failing.sort_by(|a, b| clean(b.value).total_cmp(&clean(a.value)));
        failing.truncate(MAX_WITNESSES);
        failing.sort_by(|a, b| a.location.total_cmp(&b.location));
        Self {
            property,
            subject: subject.into(),
            grid,
            max_violation,
            tolerance,
            verdict: if max_violation <= tolerance { Verdict::Pass } else { Verdict::Fail },
            witnesses: failing,
            measured: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Re-judges the report against another tolerance. Witnesses recorded
    /// under the old tolerance that no longer fail are dropped.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = if self.max_violation <= tolerance { Verdict::Pass } else { Verdict::Fail };
        self.witnesses.retain(|w| w.value.is_nan() || w.value > tolerance);
        self
    }

    fn merge(property: PropertyKind, subject: String, parts: &[PropertyReport]) -> Self {
        let max_violation = parts.iter().map(|r| r.max_violation).fold(0.0, f64::max);
        let tolerance = parts.iter().map(|r| r.tolerance).fold(f64::INFINITY, f64::min);
        let mut witnesses: Vec<Witness> = parts.iter().flat_map(|r| r.witnesses.iter().copied()).collect();
        witnesses.sort_by(|a, b| a.location.total_cmp(&b.location));
        witnesses.truncate(MAX_WITNESSES);
        Self {
            property,
            subject,
            grid: parts[0].grid,
            max_violation,
            tolerance,
            verdict: if parts.iter().all(|r| r.passed()) { Verdict::Pass } else { Verdict::Fail },
            witnesses,
            measured: None,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// n-th central difference quotient with step h, plus the largest |F| on the stencil.
fn central_difference(f: &(dyn Fn(f64) -> f64 + Sync), s: f64, n: usize, h: f64) -> (f64, f64) {
    let mut acc = 0.0;
    let mut fmax: f64 = 0.0;
    for i in 0..=n {
        let x = s + (n as f64 / 2.0 - i as f64) * h;
        let v = f(x);
        fmax = fmax.max(v.abs());
        let c = binomial(n, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += c * v;
    }
    (acc / h.powi(n as i32), fmax)
}

/// Richardson-extrapolated n-th derivative with its roundoff floor and natural scale.
fn derivative(f: &(dyn Fn(f64) -> f64 + Sync), s: f64, n: usize) -> Result<(f64, f64, f64)> {
    if n == 0 {
        let v = f(s);
        return Ok((v, 0.0, v.abs()));
    }
    let h = s * 1e-2;
    let (d1, m1) = central_difference(f, s, n, h);
    let (d2, m2) = central_difference(f, s, n, h / 2.0);
    let d = (4.0 * d2 - d1) / 3.0;
    let fmax = m1.max(m2);
    if !d.is_finite() || !fmax.is_finite() {
        return Err(Error::Numerical(format!(
            "derivative stencil of order {n} at s = {s} overflowed or left the domain"
        )));
    }
    let two_n = 2f64.powi(n as i32);
    let floor = 10.0 * f64::EPSILON * fmax * two_n * (4.0 * two_n + 1.0) / (3.0 * h.powi(n as i32));
    let scale = factorial(n) * fmax / s.powi(n as i32);
    Ok((d, floor, scale))
}

fn check_frequency_grid(grid: &Grid) -> Result<()> {
    if !(grid.first() > 0.0) {
        return Err(Error::Domain("frequency grid must lie in s > 0".into()));
    }
    Ok(())
}

fn sign_pattern(
    f: &(dyn Fn(f64) -> f64 + Sync),
    grid: &Grid,
    max_order: usize,
    bernstein: bool,
) -> Result<Vec<(f64, f64)>> {
    if !(2..=8).contains(&max_order) {
        return Err(Error::InvalidParameter(format!("max_order must lie in [2, 8], got {max_order}")));
    }
    check_frequency_grid(grid)?;
    grid.nodes()
        .par_iter()
        .map(|&s| {
            let mut worst: f64 = 0.0;
            for n in 0..=max_order {
                let (d, floor, scale) = derivative(f, s, n)?;
                // CMF: (−1)ⁿF⁽ⁿ⁾ ≥ 0; CBF: F ≥ 0 and (−1)ⁿ⁻¹F⁽ⁿ⁾ ≥ 0
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let signed = if bernstein && n > 0 { -sign * d } else { sign * d };
                let excess = (-signed - floor).max(0.0);
                if excess > 0.0 {
                    worst = worst.max(if scale > 0.0 { excess / scale } else { f64::INFINITY });
                }
            }
            Ok((s, worst))
        })
        .collect()
}

/// Sampled complete monotonicity: (−1)ⁿF⁽ⁿ⁾(s) ≥ 0 for n ≤ max_order at every node.
pub fn check_cmf(f: &(dyn Fn(f64) -> f64 + Sync), s_grid: &Grid, max_order: usize) -> Result<PropertyReport> {
    let v = sign_pattern(f, s_grid, max_order, false)?;
    Ok(PropertyReport::from_violations(
        PropertyKind::Cmf,
        "F",
        GridSummary::of(s_grid, Domain::Frequency),
        SIGN_TOLERANCE,
        &v,
    ))
}

/// Sampled complete Bernstein structure: F ≥ 0 and F′ completely monotone.
pub fn check_cbf(f: &(dyn Fn(f64) -> f64 + Sync), s_grid: &Grid, max_order: usize) -> Result<PropertyReport> {
    let v = sign_pattern(f, s_grid, max_order, true)?;
    Ok(PropertyReport::from_violations(
        PropertyKind::Cbf,
        "F",
        GridSummary::of(s_grid, Domain::Frequency),
        SIGN_TOLERANCE,
        &v,
    ))
}

/// F is accepted as Stieltjes when F is CMF and 1/F is CBF on the grid.
pub fn check_stieltjes(f: &(dyn Fn(f64) -> f64 + Sync), s_grid: &Grid) -> Result<PropertyReport> {
    check_frequency_grid(s_grid)?;
    if let Some(&s) = s_grid.nodes().iter().find(|&&s| !(f(s) > 0.0)) {
        return Err(Error::Domain(format!("Stieltjes check needs F > 0, violated at s = {s}")));
    }
    let cmf = check_cmf(f, s_grid, DEFAULT_MAX_ORDER)?;
    let inv = |s: f64| 1.0 / f(s);
    let cbf = check_cbf(&inv, s_grid, DEFAULT_MAX_ORDER)?;
    Ok(PropertyReport::merge(PropertyKind::Sf, "F".into(), &[cmf, cbf]))
}

/// Attaches a subject label to a report.
pub fn labelled(mut r: PropertyReport, subject: impl Into<String>) -> PropertyReport {
    r.subject = subject.into();
    r
}

/// Regular part of k∗M at t, with the delta algebra applied.
fn sonine_value(m: &GeneralizedFunction, k: &GeneralizedFunction, t: f64) -> Result<f64> {
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let eval = |g: &GeneralizedFunction, x: f64| -> f64 {
        match g.regular(x) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                f64::NAN
            }
        }
    };
    let (conv, err) = tanh_sinh(|_, dl, dr| eval(k, dl) * eval(m, dr), 0.0, t, 1e-12)?;
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    if err > 1e-8 * conv.abs().max(1e-300) {
        return Err(Error::Convergence {
            terms: 0,
            context: format!(
                "convolution of the kernels did not settle at t = {t} (error estimate {err:e}); an undeclared singularity is likely"
            ),
        });
    }
    let mut value = conv;
    if k.delta_weight != 0.0 {
        value += k.delta_weight * m.regular(t)?;
    }
    if m.delta_weight != 0.0 {
        value += m.delta_weight * k.regular(t)?;
    }
    Ok(value)
}

/// max over the grid of |∫₀ᵗ k(u)M(t−u)du − 1|.
pub fn sonine_residual(m: &GeneralizedFunction, k: &GeneralizedFunction, t_grid: &Grid) -> Result<PropertyReport> {
    if !(t_grid.first() > 0.0) {
        return Err(Error::Domain("Sonine residual needs a grid starting at t > 0".into()));
    }
    let both_deltas = m.delta_weight * k.delta_weight;
    let v: Vec<(f64, f64)> = t_grid
        .nodes()
        .par_iter()
        .map(|&t| {
            let value = sonine_value(m, k, t)?;
            // a δ∗δ term can never be matched by the constant 1
            let extra = if both_deltas != 0.0 { f64::INFINITY } else { 0.0 };
            Ok((t, (value - 1.0).abs() + extra))
        })
        .collect::<Result<_>>()?;
    Ok(PropertyReport::from_violations(
        PropertyKind::SonineUnit,
        "k * M",
        GridSummary::of(t_grid, Domain::Time),
        SONINE_TOLERANCE,
        &v,
    ))
}

/// Sonine residual of a model's own kernel pair.
pub fn model_sonine_residual(model: &RelaxationModel, t_grid: &Grid) -> Result<PropertyReport> {
    let m = timedomain::kernel_m(model)?;
    let k = timedomain::kernel_k(model)?;
    Ok(labelled(sonine_residual(&m, &k, t_grid)?, format!("{} k * M", model.kind)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrlEnd {
    Zero,
    Infinity,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Log-log slope of φ̂ at high s or of 1 − φ̂ at low s.
pub fn url_slope(m: &RelaxationModel, end: UrlEnd) -> Result<f64> {
    m.validate()?;
    if m.family() == Family::Ew {
        return Err(Error::InvalidParameter(
            "the excess-wing model does not follow a single URL".into(),
        ));
    }
    let (lo, hi) = match end {
        UrlEnd::Infinity => (1e3 / m.tau, 1e6 / m.tau),
        UrlEnd::Zero => (1e-6 / m.tau, 1e-3 / m.tau),
    };
    let grid = Grid::logarithmic(lo, hi, URL_POINTS)?;
    let mut x = Vec::with_capacity(URL_POINTS);
    let mut y = Vec::with_capacity(URL_POINTS);
    for &s in grid.nodes() {
        let v = match end {
            UrlEnd::Infinity => models::spectral(m, s)?,
            UrlEnd::Zero => models::spectral_complement(m, s)?,
        };
        x.push(s.ln());
        y.push(v.ln());
    }
    Ok(least_squares_slope(&x, &y))
}

/// Both URL slopes against the (a, b) exponent mapping.
pub fn check_url(m: &RelaxationModel) -> Result<Vec<PropertyReport>> {
    let e = models::url_exponents(m)?;
    [(UrlEnd::Infinity, e.a - 1.0), (UrlEnd::Zero, e.b)]
        .into_iter()
        .map(|(end, expected)| {
            let slope = url_slope(m, end)?;
            let (lo, hi) = match end {
                UrlEnd::Infinity => (1e3 / m.tau, 1e6 / m.tau),
                UrlEnd::Zero => (1e-6 / m.tau, 1e-3 / m.tau),
            };
            let grid = GridSummary {
                domain: Domain::Frequency,
                start: lo,
                stop: hi,
                count: URL_POINTS,
                scheme: GridScheme::Logarithmic,
            };
            let end_name = match end {
                UrlEnd::Infinity => "infinity",
                UrlEnd::Zero => "zero",
            };
            let mut r = PropertyReport::from_violations(
                PropertyKind::UrlSlope,
                format!("{} slope at {end_name} (expected {expected})", m.kind),
                grid,
                URL_TOLERANCE,
                &[(lo.sqrt() * hi.sqrt(), (slope - expected).abs())],
            );
            r.measured = Some(slope);
            Ok(r)
        })
        .collect()
}

/// max over interior nodes of |φ(t) + n′(t)| relative to max |φ|.
pub fn check_response_relaxation(m: &RelaxationModel, t_grid: &Grid) -> Result<PropertyReport> {
    m.validate()?;
    let nodes = t_grid.nodes();
    if !(nodes[0] > 0.0) {
        return Err(Error::Domain("derivative check needs a grid inside t > 0".into()));
    }
    let phi = timedomain::response(m)?;
    let interior = &nodes[1..nodes.len() - 1];
    let rows: Vec<(f64, f64, f64)> = interior
        .par_iter()
        .map(|&t| {
            let h = t * 1e-2;
            let d = |h: f64| -> Result<f64> {
                Ok((timedomain::relaxation(m, t + h)? - timedomain::relaxation(m, t - h)?) / (2.0 * h))
            };
            let dn = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
            let p = phi.regular(t)?;
            Ok((t, p, (p + dn).abs()))
        })
        .collect::<Result<_>>()?;
    let scale = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let v: Vec<(f64, f64)> = rows.iter().map(|&(t, _, e)| (t, e / scale)).collect();
    Ok(PropertyReport::from_violations(
        PropertyKind::DerivativeRelation,
        format!("{} response vs -dn/dt", m.kind),
        GridSummary::of(t_grid, Domain::Time),
        DERIVATIVE_TOLERANCE,
        &v,
    ))
}

/// n(t) ∈ [0, 1] and non-increasing on the grid.
pub fn check_relaxation_shape(m: &RelaxationModel, t_grid: &Grid) -> Result<Vec<PropertyReport>> {
    let n: Vec<f64> = t_grid
        .nodes()
        .par_iter()
        .map(|&t| timedomain::relaxation(m, t))
        .collect::<Result<_>>()?;
    let grid = GridSummary::of(t_grid, Domain::Time);
    let bounds: Vec<(f64, f64)> = t_grid
        .nodes()
        .iter()
        .zip(&n)
        .map(|(&t, &v)| (t, (-v).max(v - 1.0).max(0.0)))
        .collect();
    let rises: Vec<(f64, f64)> = t_grid.nodes()[1..]
        .iter()
        .zip(n.windows(2))
        .map(|(&t, w)| (t, (w[1] - w[0]).max(0.0)))
        .collect();
    Ok(vec![
        PropertyReport::from_violations(PropertyKind::Nonnegative, format!("{} n in [0, 1]", m.kind), grid, 1e-10, &bounds),
        PropertyReport::from_violations(
            PropertyKind::MonotoneDecreasing,
            format!("{} n non-increasing", m.kind),
            grid,
            1e-10,
            &rises,
        ),
    ])
}

/// The four transform-domain class checks for one model:
/// φ̂, M̂, k̂ Stieltjes and Ψ complete Bernstein.
pub fn model_function_classes(m: &RelaxationModel, s_grid: &Grid) -> Result<Vec<PropertyReport>> {
    m.validate()?;
    let mm = *m;
    let real = |f: fn(&RelaxationModel, f64) -> Result<f64>| move |s: f64| f(&mm, s).unwrap_or(f64::NAN);
    let name = m.kind;
    Ok(vec![
        labelled(check_stieltjes(&real(models::spectral), s_grid)?, format!("{name} spectral")),
        labelled(check_stieltjes(&real(models::memory_m_hat), s_grid)?, format!("{name} M hat")),
        labelled(check_stieltjes(&real(models::memory_k_hat), s_grid)?, format!("{name} k hat")),
        labelled(
            check_cbf(&real(models::levy_exponent), s_grid, DEFAULT_MAX_ORDER)?,
            format!("{name} levy exponent"),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s_grid() -> Grid {
        Grid::logarithmic(1e-4, 1e4, 33).unwrap()
    }

    #[test]
    fn cmf_examples() {
        let g = Grid::logarithmic(0.1, 10.0, 21).unwrap();
        assert!(check_cmf(&|s: f64| (-s).exp(), &g, 6).unwrap().passed());
        let bad = check_cmf(&|s: f64| s.sin() + 2.0, &g, 4).unwrap();
        assert!(!bad.passed());
        assert!(!bad.witnesses.is_empty());
        assert!(check_cmf(&|s: f64| (-s).exp(), &g, 9).is_err());
    }

    #[test]
    fn stieltjes_examples() {
        let g = s_grid();
        assert!(check_stieltjes(&|s: f64| 1.0 / (1.0 + s), &g).unwrap().passed());
        assert!(!check_stieltjes(&|s: f64| s.sqrt(), &g).unwrap().passed());
        assert!(check_cbf(&|s: f64| s.sqrt(), &g, 4).unwrap().passed());
        let jws = RelaxationModel::jws(0.5, 0.5, 1.0).unwrap();
        let f = |s: f64| models::spectral(&jws, s).unwrap();
        assert!(check_stieltjes(&f, &g).unwrap().passed());
    }

    #[test]
    fn hn_memory_is_completely_monotone() {
        let hn = RelaxationModel::havriliak_negami(0.7, 0.4, 1.0).unwrap();
        let f = |s: f64| models::memory_m_hat(&hn, s).unwrap();
        assert!(check_cmf(&f, &s_grid(), 4).unwrap().passed());
    }

    #[test]
    fn report_serializes_with_named_fields() {
        let g = Grid::logarithmic(0.1, 10.0, 5).unwrap();
        let r = check_cmf(&|s: f64| (-s).exp(), &g, 2).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["property"], "CMF");
        assert_eq!(json["verdict"], "pass");
        for key in ["grid", "max_violation", "tolerance", "witnesses"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn sonine_debye_and_cole_cole() {
        let g = Grid::logarithmic(0.01, 10.0, 40).unwrap();
        let d = RelaxationModel::debye(1.0).unwrap();
        let r = model_sonine_residual(&d, &g).unwrap();
        assert_eq!(r.max_violation, 0.0);
        let cc = RelaxationModel::cole_cole(0.5, 1.0).unwrap();
        let r = model_sonine_residual(&cc, &g).unwrap();
        assert!(r.max_violation < 1e-10, "{}", r.max_violation);
    }

    #[test]
    fn sonine_rejects_mismatched_pair() {
        let g = Grid::logarithmic(0.1, 1.0, 5).unwrap();
        let m = GeneralizedFunction::power(1.0, 0.5).unwrap();
        let k = GeneralizedFunction::power(1.0, 0.4).unwrap();
        assert!(!sonine_residual(&m, &k, &g).unwrap().passed());
    }

    #[test]
    fn url_examples() {
        let d = RelaxationModel::debye(1.0).unwrap();
        assert!((url_slope(&d, UrlEnd::Infinity).unwrap() + 1.0).abs() < 0.01);
        let hn = RelaxationModel::havriliak_negami(0.5, 0.5, 1.0).unwrap();
        assert!((url_slope(&hn, UrlEnd::Zero).unwrap() - 0.5).abs() < 0.02);
        let jws = RelaxationModel::jws(0.5, 0.5, 1.0).unwrap();
        assert!((url_slope(&jws, UrlEnd::Infinity).unwrap() + 0.5).abs() < 0.02);
        let ew = RelaxationModel::excess_wing(0.5, 1.0, 1.0).unwrap();
        assert!(url_slope(&ew, UrlEnd::Zero).is_err());
        assert!(check_url(&hn).unwrap().iter().all(|r| r.passed()));
    }

    #[test]
    fn response_relaxation_examples() {
        let g = Grid::uniform(0.1, 5.0, 49).unwrap();
        let d = RelaxationModel::debye(1.0).unwrap();
        assert!(check_response_relaxation(&d, &g).unwrap().max_violation < 1e-8);
        let hn = RelaxationModel::havriliak_negami(0.8, 0.9, 1.0).unwrap();
        assert!(check_response_relaxation(&hn, &g).unwrap().passed());
        let jws = RelaxationModel::jws(0.5, 0.5, 1.0).unwrap();
        assert!(check_response_relaxation(&jws, &g).unwrap().passed());
    }

    #[test]
    fn relaxation_shape_hn() {
        let g = Grid::logarithmic(1e-3, 1e2, 30).unwrap();
        let hn = RelaxationModel::havriliak_negami(0.6, 0.8, 1.0).unwrap();
        assert!(check_relaxation_shape(&hn, &g).unwrap().iter().all(|r| r.passed()));
    }
}
