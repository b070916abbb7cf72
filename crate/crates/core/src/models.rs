//! Relaxation models and their Laplace-domain quantities.

use crate::error::{ensure_finite, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Debye,
    ColeCole,
    ColeDavidson,
    HavriliakNegami,
    Jws,
    ExcessWing,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Debye,
        ModelKind::ColeCole,
        ModelKind::ColeDavidson,
        ModelKind::HavriliakNegami,
        ModelKind::Jws,
        ModelKind::ExcessWing,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Debye => "debye",
            ModelKind::ColeCole => "cc",
            ModelKind::ColeDavidson => "cd",
            ModelKind::HavriliakNegami => "hn",
            ModelKind::Jws => "jws",
            ModelKind::ExcessWing => "ew",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "debye" | "d" => Ok(ModelKind::Debye),
            "cc" | "colecole" => Ok(ModelKind::ColeCole),
            "cd" | "coledavidson" => Ok(ModelKind::ColeDavidson),
            "hn" | "havriliaknegami" => Ok(ModelKind::HavriliakNegami),
            "jws" => Ok(ModelKind::Jws),
            "ew" | "excesswing" => Ok(ModelKind::ExcessWing),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Which closed forms a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Hn,
    Jws,
    Ew,
}

/// A relaxation model with its rate B (units 1/time).
///
/// Single-time models store `tau1 = tau2 = tau`; the excess-wing model stores
/// `tau = tau1` and ignores `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationModel {
    pub kind: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    #[serde(rename = "B")]
    pub rate: f64,
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {v}")));
    }
    Ok(())
}

fn check_time(name: &str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl RelaxationModel {
    fn single(kind: ModelKind, alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        let m = Self {
            kind,
            alpha,
            beta,
            tau,
            tau1: tau,
            tau2: tau,
            rate: 1.0 / tau,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn debye(tau: f64) -> Result<Self> {
        Self::single(ModelKind::Debye, 1.0, 1.0, tau)
    }

    pub fn cole_cole(alpha: f64, tau: f64) -> Result<Self> {
        Self::single(ModelKind::ColeCole, alpha, 1.0, tau)
    }

    pub fn cole_davidson(beta: f64, tau: f64) -> Result<Self> {
        Self::single(ModelKind::ColeDavidson, 1.0, beta, tau)
    }

    pub fn havriliak_negami(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        Self::single(ModelKind::HavriliakNegami, alpha, beta, tau)
    }

    pub fn jws(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        Self::single(ModelKind::Jws, alpha, beta, tau)
    }

    pub fn excess_wing(alpha: f64, tau1: f64, tau2: f64) -> Result<Self> {
        let m = Self {
            kind: ModelKind::ExcessWing,
            alpha,
            beta: 1.0,
            tau: tau1,
            tau1,
            tau2,
            rate: 1.0 / tau1,
        };
        m.validate()?;
        Ok(m)
    }

    /// Same model with a different rate B.
    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        self.rate = rate;
        self.validate()?;
        Ok(self)
    }

    /// Builds a model from loosely specified parameters, applying the
    /// constraints of each kind.
    pub fn from_parts(
        kind: ModelKind,
        alpha: Option<f64>,
        beta: Option<f64>,
        tau: Option<f64>,
        tau1: Option<f64>,
        tau2: Option<f64>,
        rate: Option<f64>,
    ) -> Result<Self> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidParameter(format!("model '{kind}' requires {name}")))
        };
        let tau_single = || tau.or(tau1).ok_or_else(|| Error::InvalidParameter(format!("model '{kind}' requires tau")));
        let m = match kind {
            ModelKind::Debye => Self::debye(tau_single()?)?,
            ModelKind::ColeCole => Self::cole_cole(need("alpha", alpha)?, tau_single()?)?,
            ModelKind::ColeDavidson => Self::cole_davidson(need("beta", beta)?, tau_single()?)?,
            ModelKind::HavriliakNegami => {
                Self::havriliak_negami(need("alpha", alpha)?, need("beta", beta)?, tau_single()?)?
            }
            ModelKind::Jws => Self::jws(need("alpha", alpha)?, need("beta", beta)?, tau_single()?)?,
            ModelKind::ExcessWing => Self::excess_wing(need("alpha", alpha)?, need("tau1", tau1)?, need("tau2", tau2)?)?,
        };
        match rate {
            Some(b) => m.with_rate(b),
            None => Ok(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent("alpha", self.alpha)?;
        check_exponent("beta", self.beta)?;
        check_time("tau", self.tau)?;
        check_time("tau1", self.tau1)?;
        check_time("tau2", self.tau2)?;
        check_time("B", self.rate)?;
        let forced = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{} requires {what}", self.kind)))
            }
        };
        match self.kind {
            ModelKind::Debye => forced("alpha = beta = 1", self.alpha == 1.0 && self.beta == 1.0)?,
            ModelKind::ColeCole => forced("beta = 1", self.beta == 1.0)?,
            ModelKind::ColeDavidson => forced("alpha = 1", self.alpha == 1.0)?,
            _ => {}
        }
        if self.kind != ModelKind::ExcessWing && (self.tau1 != self.tau || self.tau2 != self.tau) {
            return Err(Error::InvalidParameter(format!(
                "{} has a single time constant; tau1 and tau2 must equal tau",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        match self.kind {
            ModelKind::Jws => Family::Jws,
            ModelKind::ExcessWing => Family::Ew,
            _ => Family::Hn,
        }
    }

    /// Characteristic time used to scale grids.
    pub fn time_scale(&self) -> f64 {
        self.tau
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be positive and finite, got {s}")));
    }
    Ok(())
}

/// ln(1 + z) without cancellation for small |z|.
pub(crate) fn cln1p(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let u = z / (2.0 + z);
        let u2 = u * u;
        let mut term = u;
        let mut acc = u;
        for k in 1..40 {
            term *= u2;
            let add = term / (2 * k + 1) as f64;
            acc += add;
            if add.norm() < 1e-17 * acc.norm() {
                break;
            }
        }
        2.0 * acc
    } else {
        (1.0 + z).ln()
    }
}

/// e^z − 1 without cancellation for small |z|.
pub(crate) fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut acc = z;
        for k in 2..40 {
            term *= z / k as f64;
            acc += term;
            if term.norm() < 1e-17 * acc.norm() {
                break;
            }
        }
        acc
    } else {
        z.exp() - 1.0
    }
}

fn cpow(z: Complex64, p: f64) -> Complex64 {
    (p * z.ln()).exp()
}

/// a/b without forming |b|², so huge denominators do not overflow.
pub(crate) fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let d = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / d, (a.im - a.re * r) / d)
    } else {
        let r = b.re / b.im;
        let d = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / d, (a.im * r - a.re) / d)
    }
}

/// Analytic continuations into the cut plane |arg s| < π. No validation.
pub mod continued {
    use super::*;

    /// φ̂(s)
    pub fn spectral(m: &RelaxationModel, s: Complex64) -> Complex64 {
        match m.family() {
            Family::Hn => (-m.beta * cln1p(cpow(m.tau * s, m.alpha))).exp(),
            Family::Jws => -cexpm1(-m.beta * cln1p(cpow(m.tau * s, -m.alpha))),
            Family::Ew => {
                let z = cpow(m.tau2 * s, m.alpha);
                cdiv(1.0 + z, 1.0 + s * m.tau1 + z)
            }
        }
    }

    /// 1 − φ̂(s)
    pub fn spectral_complement(m: &RelaxationModel, s: Complex64) -> Complex64 {
        match m.family() {
            Family::Hn => -cexpm1(-m.beta * cln1p(cpow(m.tau * s, m.alpha))),
            Family::Jws => (-m.beta * cln1p(cpow(m.tau * s, -m.alpha))).exp(),
            Family::Ew => {
                let z = cpow(m.tau2 * s, m.alpha);
                cdiv(s * m.tau1, 1.0 + s * m.tau1 + z)
            }
        }
    }

    /// Ψ(s) = B(1 − φ̂)/φ̂
    pub fn levy_exponent(m: &RelaxationModel, s: Complex64) -> Complex64 {
        let b = m.rate;
        match m.family() {
            Family::Hn => b * cexpm1(m.beta * cln1p(cpow(m.tau * s, m.alpha))),
            Family::Jws => cdiv(Complex64::new(b, 0.0), cexpm1(m.beta * cln1p(cpow(m.tau * s, -m.alpha)))),
            Family::Ew => cdiv(b * s * m.tau1, 1.0 + cpow(m.tau2 * s, m.alpha)),
        }
    }

    /// M̂(s) = 1/Ψ(s)
    pub fn memory_m_hat(m: &RelaxationModel, s: Complex64) -> Complex64 {
        let b = m.rate;
        match m.family() {
            Family::Hn => cdiv(Complex64::new(1.0, 0.0), levy_exponent(m, s)),
            Family::Jws => cexpm1(m.beta * cln1p(cpow(m.tau * s, -m.alpha))) / b,
            Family::Ew => cdiv(1.0 + cpow(m.tau2 * s, m.alpha), b * s * m.tau1),
        }
    }

    /// k̂(s) = Ψ(s)/s
    pub fn memory_k_hat(m: &RelaxationModel, s: Complex64) -> Complex64 {
        cdiv(levy_exponent(m, s), s)
    }
}

fn real(f: fn(&RelaxationModel, Complex64) -> Complex64, m: &RelaxationModel, s: f64) -> Result<f64> {
    m.validate()?;
    check_s(s)?;
    let v = f(m, Complex64::new(s, 0.0)).re;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{} transform not finite at s = {s}", m.kind)))
    }
}

/// φ̂(s) on the positive axis.
pub fn spectral(m: &RelaxationModel, s: f64) -> Result<f64> {
    real(continued::spectral, m, s)
}

/// 1 − φ̂(s), computed without cancellation.
pub fn spectral_complement(m: &RelaxationModel, s: f64) -> Result<f64> {
    real(continued::spectral_complement, m, s)
}

pub fn levy_exponent(m: &RelaxationModel, s: f64) -> Result<f64> {
    real(continued::levy_exponent, m, s)
}

/// Φ(s) = s/Ψ(s)
pub fn levy_exponent_dual(m: &RelaxationModel, s: f64) -> Result<f64> {
    Ok(s / levy_exponent(m, s)?)
}

pub fn memory_m_hat(m: &RelaxationModel, s: f64) -> Result<f64> {
    real(continued::memory_m_hat, m, s)
}

pub fn memory_k_hat(m: &RelaxationModel, s: f64) -> Result<f64> {
    real(continued::memory_k_hat, m, s)
}

/// Memory transforms in the tabulated form, which assumes B = 1 for the
/// single-time models and τ₁ = τ₂^α for the excess wing. Returns (M̂, k̂).
pub fn tabulated_memory_transforms(m: &RelaxationModel, s: f64) -> Result<(f64, f64)> {
    m.validate()?;
    check_s(s)?;
    let (a, b, tau) = (m.alpha, m.beta, m.tau);
    let bb = m.rate;
    Ok(match m.family() {
        Family::Hn => {
            let p = (1.0 + (tau * s).powf(a)).powf(b);
            (1.0 / (bb * (p - 1.0)), bb * p / s - 1.0 / s)
        }
        Family::Jws => {
            let p = (1.0 + (tau * s).powf(-a)).powf(b);
            (p / bb - 1.0, bb / (s * (p - 1.0)))
        }
        Family::Ew => {
            let q = m.tau2.powf(-a) + s.powf(a);
            (q / (bb * s), bb / q)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrlExponents {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermittivityPoint {
    pub omega: f64,
    pub eps_real: f64,
    pub eps_imag: f64,
}

/// ε̂(ω) = ε_∞ + (ε₀ − ε_∞) φ̂(iω).
pub fn complex_permittivity(m: &RelaxationModel, omega: f64, eps0: f64, epsinf: f64) -> Result<PermittivityPoint> {
    m.validate()?;
    ensure_finite("eps0", eps0)?;
    ensure_finite("epsinf", epsinf)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    if eps0 <= epsinf {
        return Err(Error::InvalidParameter(format!(
            "eps0 must exceed epsinf, got {eps0} and {epsinf}"
        )));
    }
    let phi = continued::spectral(m, Complex64::new(0.0, omega));
    let eps = epsinf + (eps0 - epsinf) * phi;
    Ok(PermittivityPoint {
        omega,
        eps_real: eps.re,
        eps_imag: eps.im,
    })
}

/// Jonscher exponents (a, b) of a single-time model.
pub fn url_exponents(m: &RelaxationModel) -> Result<UrlExponents> {
    m.validate()?;
    match m.family() {
        Family::Hn => Ok(UrlExponents {
            a: 1.0 - m.alpha * m.beta,
            b: m.alpha,
        }),
        Family::Jws => Ok(UrlExponents {
            a: 1.0 - m.alpha,
            b: m.alpha * m.beta,
        }),
        Family::Ew => Err(Error::InvalidParameter(
            "the excess-wing model has no single pair of URL exponents".into(),
        )),
    }
}
