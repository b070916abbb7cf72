//! Three-parameter (Prabhakar) and binomial Mittag-Leffler functions of a real argument.
//!
//! E^λ_{ν,μ}(x) = Σ_r (λ)_r x^r / (r! Γ(μ + νr)).

use crate::error::{ensure_finite, Error, Result};
use crate::laplace::talbot;
use crate::special::{ln_rgamma, rgamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Below this |x| negative arguments are summed directly.
pub const X_SWITCH: f64 = 5.0;
/// Series whose absolute sum exceeds the result by more than this are rerouted.
const MAX_AMPLIFICATION: f64 = 1e3;
const MAX_TERMS: usize = 100_000;
const CONTOUR_NODES: usize = 32;
const ASYMPTOTIC_TERMS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ml3Params {
    pub nu: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Ml3Params {
    pub fn new(nu: f64, mu: f64, lambda: f64) -> Result<Self> {
        let p = Self { nu, mu, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("nu", self.nu)?;
        ensure_finite("mu", self.mu)?;
        ensure_finite("lambda", self.lambda)?;
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {}", self.nu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ml2Params {
    pub nu1: f64,
    pub nu2: f64,
    pub mu: f64,
}

impl Ml2Params {
    pub fn new(nu1: f64, nu2: f64, mu: f64) -> Result<Self> {
        let p = Self { nu1, nu2, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("nu1", self.nu1)?;
        ensure_finite("nu2", self.nu2)?;
        ensure_finite("mu", self.mu)?;
        if self.nu1 <= 0.0 || self.nu2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nu1 and nu2 must be positive, got {} and {}",
                self.nu1, self.nu2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    sum: f64,
    abs_sum: f64,
}

impl Partial {
    fn amplification(&self) -> f64 {
        if self.abs_sum == 0.0 {
            1.0
        } else {
            self.abs_sum / self.sum.abs()
        }
    }
}

/// True when two consecutive terms are negligible and the terms have stopped growing.
fn tail_negligible(term: f64, prev: f64, sum: f64) -> bool {
    let floor = 1e-16 * sum.abs() + f64::MIN_POSITIVE;
    term.abs() <= floor && prev.abs() <= floor && term.abs() <= prev.abs()
}

fn ml3_series(p: Ml3Params, x: f64) -> Result<Partial> {
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    // c_r = (λ)_r x^r / r!, carried both directly and as a logarithm
    let mut c = 1.0f64;
    let mut ln_c = 0.0f64;
    let mut sign_c = 1.0f64;
    let mut prev = f64::INFINITY;
    let ln_x = x.abs().ln();
    for r in 0..MAX_TERMS {
        let arg = p.mu + p.nu * r as f64;
        let term = if arg < 170.0 && c.abs() < 1e290 && (c == 0.0 || c.abs() > 1e-290) {
            c * rgamma(arg)
        } else {
            let (lg, sg) = ln_rgamma(arg);
            sign_c * sg * (ln_c + lg).exp()
        };
        if !term.is_finite() {
            return Err(Error::Numerical(format!(
                "series term overflow in E^{}_{{{},{}}}({x})",
                p.lambda, p.nu, p.mu
            )));
        }
        sum += term;
        abs_sum += term.abs();
        let lam_r = p.lambda + r as f64;
        if lam_r == 0.0 {
            // (λ)_r vanishes from here on: a polynomial
            return Ok(Partial { sum, abs_sum });
        }
        if r > 0 && tail_negligible(term, prev, sum) {
            return Ok(Partial { sum, abs_sum });
        }
        prev = term;
        let f = lam_r * x / (r as f64 + 1.0);
        c *= f;
        ln_c += lam_r.abs().ln() + ln_x - (r as f64 + 1.0).ln();
        if f < 0.0 {
            sign_c = -sign_c;
        }
    }
    Err(Error::Convergence {
        terms: MAX_TERMS,
        context: format!("E^{}_{{{},{}}}({x})", p.lambda, p.nu, p.mu),
    })
}

/// Algebraic expansion for x → −∞ and ν ≤ 1,
/// E^λ_{ν,μ}(x) ~ Σ_k (−1)^k (λ)_k/k! |x|^(−λ−k)/Γ(μ − ν(λ + k)),
/// used only when its smallest term is below roundoff.
fn ml3_asymptotic(p: Ml3Params, x: f64) -> Option<f64> {
    let lx = (-x).ln();
    // terms are scaled by |x|^λ, restored at the end
    let mut sum = 0.0;
    let mut ln_c = 0.0f64;
    let mut sign_c = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 0..ASYMPTOTIC_TERMS {
        let kf = k as f64;
        if k > 0 {
            let f = p.lambda + kf - 1.0;
            if f == 0.0 {
                break;
            }
            ln_c += f.abs().ln() - kf.ln() - lx;
            sign_c *= -f.signum();
        }
        let (lg, sg) = ln_rgamma(p.mu - p.nu * (p.lambda + kf));
        let term = if sg == 0.0 { 0.0 } else { sign_c * sg * (ln_c + lg).exp() };
        sum += term;
        if tail_negligible(term, prev, sum) && sum != 0.0 {
            return Some(sum * (-p.lambda * lx).exp());
        }
        if prev != 0.0 && term.abs() > prev.abs() {
            return None;
        }
        prev = term;
    }
    None
}

/// Inverse of s^(νλ−μ)(s^ν − x)^(−λ) at t = 1. Valid for ν ≤ 1, x < 0.
fn ml3_contour(p: Ml3Params, x: f64) -> Result<f64> {
    let lead = p.mu <= 0.0;
    let g = |s: Complex64| {
        let ls = s.ln();
        let base = (p.nu * ls).exp() - x;
        let v = ((p.nu * p.lambda - p.mu) * ls - p.lambda * base.ln()).exp();
        if lead {
            // the r = 0 term s^(−μ) does not decay; it is added back exactly
            v - (-p.mu * ls).exp()
        } else {
            v
        }
    };
    let v = talbot(g, 1.0, CONTOUR_NODES)?;
    Ok(if lead { v + rgamma(p.mu) } else { v })
}

/// E^λ_{ν,μ}(x).
pub fn ml3(p: Ml3Params, x: f64) -> Result<f64> {
    p.validate()?;
    ensure_finite("x", x)?;
    if x == 0.0 {
        return Ok(rgamma(p.mu));
    }
    if x > 0.0 {
        return ml3_series(p, x).map(|s| s.sum);
    }
    let contour_ok = p.nu <= 1.0;
    if p.nu == 1.0 && x >= -700.0 {
        // E^λ_{1,μ}(x) = e^x E^{μ−λ}_{1,μ}(−x): a series without cancellation
        let q = Ml3Params {
            lambda: p.mu - p.lambda,
            ..p
        };
        if let Ok(s) = ml3_series(q, -x) {
            if s.amplification() <= MAX_AMPLIFICATION {
                return Ok(x.exp() * s.sum);
            }
        }
    }
    if x < -X_SWITCH && contour_ok {
        if let Some(v) = ml3_asymptotic(p, x) {
            return Ok(v);
        }
    }
    if x >= -X_SWITCH || !contour_ok {
        match ml3_series(p, x) {
            Ok(s) if s.amplification() <= MAX_AMPLIFICATION || !contour_ok => {
                if !contour_ok && s.amplification() * f64::EPSILON > 1e-8 {
                    return Err(Error::Convergence {
                        terms: MAX_TERMS,
                        context: format!(
                            "E^{}_{{{},{}}}({x}) loses all accuracy to cancellation and nu > 1 has no contour fallback",
                            p.lambda, p.nu, p.mu
                        ),
                    });
                }
                return Ok(s.sum);
            }
            Err(e) if !contour_ok => return Err(e),
            _ => {}
        }
    }
    ml3_contour(p, x)
}

/// t^(μ−1) E^λ_{ν,μ}(−a t^ν).
pub fn prabhakar(p: Ml3Params, a: f64, t: f64) -> Result<f64> {
    ensure_finite("a", a)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("prabhakar kernel requires t > 0, got {t}")));
    }
    if a < 0.0 {
        return Err(Error::Domain(format!("prabhakar kernel requires a >= 0, got {a}")));
    }
    Ok(t.powf(p.mu - 1.0) * ml3(p, -a * t.powf(p.nu))?)
}

/// dⁿ/dxⁿ [x^(μ−1) E^λ_{ν,μ}(a x^ν)] = x^(μ−1−n) E^λ_{ν,μ−n}(a x^ν).
pub fn ml3_deriv(p: Ml3Params, a: f64, n: i32, x: f64) -> Result<f64> {
    if n < 0 {
        return Err(Error::InvalidParameter(format!("derivative order must be >= 0, got {n}")));
    }
    ensure_finite("a", a)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("derivative identity requires x > 0, got {x}")));
    }
    let q = Ml3Params {
        mu: p.mu - n as f64,
        ..p
    };
    Ok(x.powf(q.mu - 1.0) * ml3(q, a * x.powf(p.nu))?)
}

/// Which single-series rearrangement of the binomial function to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rearrangement {
    /// Σ_r x₁^r E^{1+r}_{ν₂, ν₁r+μ}(x₂)
    OverFirst,
    /// Σ_r x₂^r E^{1+r}_{ν₁, ν₂r+μ}(x₁)
    OverSecond,
}

fn binom_series(p: Ml2Params, x1: f64, x2: f64, order: Rearrangement) -> Result<Partial> {
    let (xa, xb, na, nb) = match order {
        Rearrangement::OverFirst => (x1, x2, p.nu1, p.nu2),
        Rearrangement::OverSecond => (x2, x1, p.nu2, p.nu1),
    };
    if xa == 0.0 {
        let v = ml3(Ml3Params::new(nb, p.mu, 1.0)?, xb)?;
        return Ok(Partial { sum: v, abs_sum: v.abs() });
    }
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut pow = 1.0;
    let mut prev = f64::INFINITY;
    for r in 0..MAX_TERMS {
        let inner = Ml3Params::new(nb, na * r as f64 + p.mu, 1.0 + r as f64)?;
        let term = pow * ml3(inner, xb)?;
        if !term.is_finite() {
            return Err(Error::Numerical("binomial series term overflow".into()));
        }
        sum += term;
        abs_sum += term.abs();
        if r > 1 && tail_negligible(term, prev, sum) {
            return Ok(Partial { sum, abs_sum });
        }
        prev = term;
        pow *= xa;
    }
    Err(Error::Convergence {
        terms: MAX_TERMS,
        context: format!("binomial Mittag-Leffler series at ({x1}, {x2})"),
    })
}

/// Binomial function summed by one rearrangement, without any fallback.
pub fn ml_binom_series(p: Ml2Params, x1: f64, x2: f64, order: Rearrangement) -> Result<f64> {
    p.validate()?;
    ensure_finite("x1", x1)?;
    ensure_finite("x2", x2)?;
    binom_series(p, x1, x2, order).map(|s| s.sum)
}

/// Inverse of s^(−μ)/(1 − x₁s^(−ν₁) − x₂s^(−ν₂)) at t = 1; for x₁, x₂ ≤ 0 and ν₁, ν₂ ≤ 1.
fn binom_contour(p: Ml2Params, x1: f64, x2: f64) -> Result<f64> {
    let lead = p.mu <= 0.0;
    let g = |s: Complex64| {
        let ls = s.ln();
        let den = 1.0 - x1 * (-p.nu1 * ls).exp() - x2 * (-p.nu2 * ls).exp();
        let v = (-p.mu * ls).exp() / den;
        if lead {
            v - (-p.mu * ls).exp()
        } else {
            v
        }
    };
    let v = talbot(g, 1.0, CONTOUR_NODES)?;
    Ok(if lead { v + rgamma(p.mu) } else { v })
}

/// Below this magnitude of both arguments the rearranged series are used.
const BINOM_SERIES_LIMIT: f64 = 3.0;

/// E_{(ν₁,ν₂),μ}(x₁, x₂) = Σ_{k,l} (k+l)!/(k! l!) x₁^k x₂^l / Γ(μ + ν₁k + ν₂l).
pub fn ml_binom(p: Ml2Params, x1: f64, x2: f64) -> Result<f64> {
    p.validate()?;
    ensure_finite("x1", x1)?;
    ensure_finite("x2", x2)?;
    if x1 == 0.0 {
        return ml3(Ml3Params::new(p.nu2, p.mu, 1.0)?, x2);
    }
    if x2 == 0.0 {
        return ml3(Ml3Params::new(p.nu1, p.mu, 1.0)?, x1);
    }
    let contour_ok = x1 < 0.0 && x2 < 0.0 && p.nu1 <= 1.0 && p.nu2 <= 1.0;
    let small = x1.abs().max(x2.abs()) <= BINOM_SERIES_LIMIT;
    if small || !contour_ok {
        let a = binom_series(p, x1, x2, Rearrangement::OverFirst);
        let b = binom_series(p, x1, x2, Rearrangement::OverSecond);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let agree = (a.sum - b.sum).abs() <= 1e-9 * a.sum.abs().max(1e-300);
                let conditioned = a.amplification() <= MAX_AMPLIFICATION;
                if (agree && conditioned) || !contour_ok {
                    if !agree {
                        log::warn!(
                            "binomial rearrangements disagree at ({x1}, {x2}): {} vs {}",
                            a.sum,
                            b.sum
                        );
                    }
                    return Ok(a.sum);
                }
            }
            (Err(e), _) | (_, Err(e)) if !contour_ok => return Err(e),
            _ => {}
        }
    }
    binom_contour(p, x1, x2)
}
