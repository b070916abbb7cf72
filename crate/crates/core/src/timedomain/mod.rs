//! Time-domain response, relaxation and memory kernels.
//!
//! Every object is returned as a [`GeneralizedFunction`] whose transform is the
//! corresponding closed form of the models module. Delta weights are the net
//! weights at t = 0: the formal δ(t) written next to a t⁻¹/Γ(0) series term
//! cancels against that term, so only the excess-wing limit α = 1 and the
//! Debye k carry a genuine delta.

mod generalized;
mod grid;

pub use generalized::{GeneralizedFunction, RegularFn, TransformFn};
pub use grid::{Grid, GridScheme};

use crate::error::{Error, Result};
use crate::laplace::talbot;
use crate::quad::adaptive_gk;
use crate::mlf::{ml3, ml_binom, Ml2Params, Ml3Params};
use crate::models::{cdiv, continued, Family, RelaxationModel};
use crate::special::{gamma_q, rgamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Above t/τ = SERIES_LIMIT the slowly convergent or cancelling forms are
/// replaced by inversion of the closed-form transform.
pub const SERIES_LIMIT: f64 = 1.0;
/// The HN memory series is used only below t/τ = MEMORY_SERIES_LIMIT; its
/// terms decay like (t/τ)^(αβr) and inversion is cheaper beyond that.
pub const MEMORY_SERIES_LIMIT: f64 = 0.1;
const KERNEL_SERIES_TERMS: usize = 500;
/// (t/τ)^α below which the JWS k series is not attempted.
const JWS_K_SERIES_MIN: f64 = 4.0;
/// Below this (t/τ)^α the JWS k kernel uses its short-time series.
const JWS_K_SMALL_MAX: f64 = 0.25;
const JWS_K_SMALL_TERMS: usize = 60;
const TALBOT_NODES: usize = 32;
/// Above this (t/τ)^α HN relaxation is inverted from (1 − φ̂)/s, since
/// 1 − x^β E(−x) cancels.
const HN_RELAX_TAIL_MIN: f64 = 5.0;
/// Above this t/τ₁ EW relaxation is inverted from (1 − φ̂)/s as well.
const EW_RELAX_TAIL_MIN: f64 = 20.0;

/// Value of a generalized function at a point t > 0, with its delta weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub delta_weight: f64,
    pub value: f64,
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be positive and finite, got {t}")));
    }
    Ok(())
}

fn invert_regular<G>(g: G, delta: f64, t: f64) -> Result<f64>
where
    G: Fn(Complex64) -> Complex64,
{
    talbot(|s| g(s) - delta, t, TALBOT_NODES)
}

fn ew_limit(m: &RelaxationModel) -> bool {
    m.family() == Family::Ew && m.alpha == 1.0
}

fn ew_binom(m: &RelaxationModel, mu: f64, t: f64) -> Result<f64> {
    let p = Ml2Params::new(1.0, 1.0 - m.alpha, mu)?;
    let x1 = -t / m.tau1;
    let x2 = -m.tau2.powf(m.alpha) * t.powf(1.0 - m.alpha) / m.tau1;
    ml_binom(p, x1, x2)
}

/// n(t) for t ≥ 0.
pub fn relaxation(m: &RelaxationModel, t: f64) -> Result<f64> {
    m.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be non-negative and finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let (a, b) = (m.alpha, m.beta);
    let x = (t / m.tau).powf(a);
    match m.family() {
        Family::Hn if a == 1.0 && b == 1.0 => Ok((-t / m.tau).exp()),
        Family::Hn if b == 1.0 => ml3(Ml3Params::new(a, 1.0, 1.0)?, -x),
        Family::Hn if a == 1.0 => Ok(gamma_q(b, x)),
        Family::Hn if x > HN_RELAX_TAIL_MIN => invert_regular(|s| cdiv(continued::spectral_complement(m, s), s), 0.0, t),
        Family::Hn => Ok(1.0 - x.powf(b) * ml3(Ml3Params::new(a, 1.0 + a * b, b)?, -x)?),
        Family::Jws => ml3(Ml3Params::new(a, 1.0, b)?, -x),
        Family::Ew if ew_limit(m) => {
            let total = m.tau1 + m.tau2;
            Ok(m.tau1 / total * (-t / total).exp())
        }
        Family::Ew if t > EW_RELAX_TAIL_MIN * m.tau1 => {
            // n̂ − τ₁, so the constant does not swamp the power-law tail
            invert_regular(
                |s| {
                    let q = s * m.tau1 + (m.alpha * (m.tau2 * s).ln()).exp();
                    -m.tau1 * cdiv(q, 1.0 + q)
                },
                0.0,
                t,
            )
        }
        Family::Ew => ew_binom(m, 1.0, t),
    }
}

/// φ(t) = −dn/dt.
pub fn response(m: &RelaxationModel) -> Result<GeneralizedFunction> {
    m.validate()?;
    let mm = *m;
    let (a, b, tau) = (m.alpha, m.beta, m.tau);
    let g = match m.family() {
        Family::Hn if a == 1.0 => {
            // E^β_{1,β}(−x) = e^(−x)/Γ(β)
            let c = rgamma(b) / tau;
            GeneralizedFunction::new(0.0, b, tau.powf(-b), move |t| {
                let x = t / tau;
                Ok(c * x.powf(b - 1.0) * (-x).exp())
            })?
        }
        Family::Hn => {
            let p = Ml3Params::new(a, a * b, b)?;
            GeneralizedFunction::new(0.0, a * b, tau.powf(-a * b), move |t| {
                Ok((t / tau).powf(a * b - 1.0) / tau * ml3(p, -(t / tau).powf(a))?)
            })?
        }
        Family::Jws => {
            let p = Ml3Params::new(a, 0.0, b)?;
            GeneralizedFunction::new(0.0, a, b * tau.powf(-a), move |t| Ok(-ml3(p, -(t / tau).powf(a))? / t))?
        }
        Family::Ew if ew_limit(m) => {
            let total = m.tau1 + m.tau2;
            let c = m.tau1 / (total * total);
            GeneralizedFunction::new(m.tau2 / total, 1.0, c, move |t| Ok(c * (-t / total).exp()))?
        }
        Family::Ew => GeneralizedFunction::new(0.0, 1.0 - a, m.tau2.powf(a) / m.tau1, move |t| {
            if t > EW_RELAX_TAIL_MIN * mm.tau1 {
                // φ̂ − 1 carries no constant
                return invert_regular(|s| -continued::spectral_complement(&mm, s), 0.0, t);
            }
            Ok(-ew_binom(&mm, 0.0, t)? / t)
        })?,
    };
    Ok(g.with_transform(move |s| continued::spectral(&mm, s)))
}

fn hn_memory_series(m: &RelaxationModel, t: f64) -> Result<Option<f64>> {
    let (a, b) = (m.alpha, m.beta);
    let x = (t / m.tau).powf(a);
    let u = x.powf(b);
    let mut pow = u;
    let mut sum = 0.0;
    for r in 0..KERNEL_SERIES_TERMS {
        let k = (r + 1) as f64;
        let term = pow * ml3(Ml3Params::new(a, a * b * k, b * k)?, -x)?;
        sum += term;
        if r > 0 && term.abs() < 1e-14 * sum.abs() {
            return Ok(Some(sum / (m.rate * t)));
        }
        pow *= u;
    }
    Ok(None)
}

/// Non-delta part of the JWS k kernel near t = 0, from the expansion of
/// k̂ = (B/s) u/(1 − u), u = (1 + y)^(−β), in powers of y = (sτ)^(−α).
fn jws_k_small(m: &RelaxationModel, t: f64) -> Option<f64> {
    let (a, b) = (m.alpha, m.beta);
    let n = JWS_K_SMALL_TERMS;
    let mut u = vec![1.0; n + 1];
    for j in 1..=n {
        u[j] = u[j - 1] * (-b - (j - 1) as f64) / j as f64;
    }
    // (1 − u)/y = v, then q = u/v so that u/(1 − u) = q/y
    let v: Vec<f64> = (0..n).map(|j| -u[j + 1]).collect();
    let mut q = vec![0.0; n];
    for j in 0..n {
        let acc: f64 = (1..=j).map(|i| v[i] * q[j - i]).sum();
        q[j] = (u[j] - acc) / v[0];
    }
    let x = (t / m.tau).powf(a);
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut xj = 1.0;
    for j in 0..n - 1 {
        last = q[j + 1] * xj * rgamma(1.0 + a * j as f64);
        sum += last;
        xj *= x;
    }
    let singular = q[0] * rgamma(1.0 - a) / x;
    (last.abs() <= 1e-15 * sum.abs().max(1e-300)).then_some(m.rate * (singular + sum))
}

fn jws_k_series(m: &RelaxationModel, t: f64) -> Result<Option<f64>> {
    let (a, b) = (m.alpha, m.beta);
    let x = (t / m.tau).powf(a);
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for r in 0..KERNEL_SERIES_TERMS {
        let term = ml3(Ml3Params::new(a, 1.0, b * (r + 1) as f64)?, -x)?;
        sum += term;
        if r > 0 && term.abs() < 1e-14 * sum.abs() && prev.abs() < 1e-12 * sum.abs() {
            return Ok(Some(m.rate * sum));
        }
        prev = term;
    }
    Ok(None)
}

/// Cole-Davidson k = Bβ Γ(−β, x)/Γ(1 − β), with
/// Γ(−β, x) = e^(−x) ∫₀^∞ (x + v)^(−β−1) e^(−v) dv.
fn cd_kernel_k_tail(rate: f64, b: f64, x: f64) -> Result<f64> {
    let (v, _) = adaptive_gk(|v: f64| (x + v).powf(-b - 1.0) * (-v).exp(), 0.0, 60.0, 0.0, 1e-13)?;
    Ok(rate * b * rgamma(1.0 - b) * (-x).exp() * v)
}

/// Memory M(t) of the integral equation φ = BM − B M∗φ.
pub fn kernel_m(m: &RelaxationModel) -> Result<GeneralizedFunction> {
    m.validate()?;
    let mm = *m;
    let (a, b, tau, rate) = (m.alpha, m.beta, m.tau, m.rate);
    let transform = move |s: Complex64| continued::memory_m_hat(&mm, s);
    let g = match m.family() {
        Family::Hn if a == 1.0 && b == 1.0 => GeneralizedFunction::constant(1.0 / (rate * tau)),
        Family::Hn if b == 1.0 => {
            // Cole-Cole: a pure power
            GeneralizedFunction::power(tau.powf(-a) / rate, a)?
        }
        Family::Hn => GeneralizedFunction::new(0.0, a * b, tau.powf(-a * b) / rate, move |t| {
            if t <= MEMORY_SERIES_LIMIT * tau {
                if let Some(v) = hn_memory_series(&mm, t)? {
                    return Ok(v);
                }
            }
            invert_regular(transform, 0.0, t)
        })?,
        Family::Jws => {
            let p = Ml3Params::new(a, 0.0, -b)?;
            GeneralizedFunction::new(0.0, a, b * tau.powf(-a) / rate, move |t| {
                Ok(ml3(p, -(t / tau).powf(a))? / (rate * t))
            })?
        }
        Family::Ew if ew_limit(m) => {
            let c = 1.0 / (rate * m.tau1);
            GeneralizedFunction::new(m.tau2 * c, 1.0, c, move |_| Ok(c))?
        }
        Family::Ew => {
            let (t1, t2) = (m.tau1, m.tau2);
            let g1a = rgamma(1.0 - a);
            GeneralizedFunction::new(0.0, 1.0 - a, t2.powf(a) / (rate * t1), move |t| {
                Ok((1.0 + t2.powf(a) * t.powf(-a) * g1a) / (rate * t1))
            })?
        }
    };
    Ok(g.with_transform(transform))
}

/// Memory k(t) of the integro-differential equation d/dt (k∗φ) = −Bφ.
pub fn kernel_k(m: &RelaxationModel) -> Result<GeneralizedFunction> {
    m.validate()?;
    let mm = *m;
    let (a, b, tau, rate) = (m.alpha, m.beta, m.tau, m.rate);
    let transform = move |s: Complex64| continued::memory_k_hat(&mm, s);
    let g = match m.family() {
        Family::Hn if a == 1.0 && b == 1.0 => GeneralizedFunction::delta(rate * tau),
        Family::Hn if b == 1.0 && a < 1.0 => GeneralizedFunction::power(rate * tau.powf(a), 1.0 - a)?,
        Family::Hn => {
            let p = Ml3Params::new(a, 1.0 - a * b, -b)?;
            GeneralizedFunction::new(0.0, 1.0 - a * b, rate * tau.powf(a * b), move |t| {
                if a == 1.0 && t >= tau {
                    return cd_kernel_k_tail(rate, b, t / tau);
                }
                if t <= SERIES_LIMIT * tau {
                    let x = (t / tau).powf(a);
                    return Ok(rate * (tau / t).powf(a * b) * ml3(p, -x)? - rate);
                }
                invert_regular(transform, 0.0, t)
            })?
        }
        Family::Jws if a == 1.0 => {
            // k̂ tends to the constant Bτ/β: a delta plus a smooth part
            let w = rate * tau / b;
            GeneralizedFunction::new(w, 1.0, 0.0, move |t| {
                if (t / tau) >= JWS_K_SERIES_MIN {
                    if let Some(v) = jws_k_series(&mm, t)? {
                        return Ok(v);
                    }
                }
                if t / tau <= JWS_K_SMALL_MAX {
                    if let Some(v) = jws_k_small(&mm, t) {
                        return Ok(v);
                    }
                }
                invert_regular(transform, w, t)
            })?
        }
        Family::Jws => GeneralizedFunction::new(0.0, 1.0 - a, rate * tau.powf(a) / b, move |t| {
            let x = (t / tau).powf(a);
            if x >= JWS_K_SERIES_MIN {
                if let Some(v) = jws_k_series(&mm, t)? {
                    return Ok(v);
                }
            }
            if x <= JWS_K_SMALL_MAX {
                if let Some(v) = jws_k_small(&mm, t) {
                    return Ok(v);
                }
            }
            invert_regular(transform, 0.0, t)
        })?,
        Family::Ew => {
            let (t1, t2) = (m.tau1, m.tau2);
            let p = Ml3Params::new(a, a, 1.0)?;
            GeneralizedFunction::new(0.0, a, rate * t1 * t2.powf(-a), move |t| {
                Ok(rate * t1 * t2.powf(-a) * t.powf(a - 1.0) * ml3(p, -(t / t2).powf(a))?)
            })?
        }
    };
    Ok(g.with_transform(transform))
}

fn point(g: &GeneralizedFunction, t: f64) -> Result<PointValue> {
    check_t(t)?;
    Ok(PointValue {
        delta_weight: g.delta_weight,
        value: g.regular(t)?,
    })
}

pub fn response_at(m: &RelaxationModel, t: f64) -> Result<PointValue> {
    point(&response(m)?, t)
}

pub fn kernel_m_at(m: &RelaxationModel, t: f64) -> Result<PointValue> {
    point(&kernel_m(m)?, t)
}

pub fn kernel_k_at(m: &RelaxationModel, t: f64) -> Result<PointValue> {
    point(&kernel_k(m)?, t)
}
