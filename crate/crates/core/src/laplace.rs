//! Forward Laplace integrals of generalized functions and numerical inversion.

use crate::error::{Error, Result};
use crate::quad::{adaptive_gk, tanh_sinh};
use crate::special::gamma_p;
use crate::timedomain::GeneralizedFunction;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvertMethod {
    GaverStehfest,
    Talbot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSettings {
    pub forward_rel_tol: f64,
    pub invert_method: InvertMethod,
    pub gs_terms: usize,
    pub talbot_nodes: usize,
}

impl Default for TransformSettings {
    fn default() -> Self {
        Self {
            forward_rel_tol: 1e-8,
            invert_method: InvertMethod::GaverStehfest,
            gs_terms: 16,
            talbot_nodes: 32,
        }
    }
}

impl TransformSettings {
    pub fn talbot() -> Self {
        Self {
            invert_method: InvertMethod::Talbot,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gs_terms < 8 || self.gs_terms % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "gs_terms must be even and at least 8, got {}",
                self.gs_terms
            )));
        }
        if self.talbot_nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "talbot_nodes must be at least 16, got {}",
                self.talbot_nodes
            )));
        }
        if !(self.forward_rel_tol > 0.0 && self.forward_rel_tol < 1.0) {
            return Err(Error::InvalidParameter("forward_rel_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// An s-domain function. Real-axis values are always available; complex values
/// only for transforms known in closed form.
pub trait Transform {
    fn real(&self, s: f64) -> f64;
    fn complex(&self, _s: Complex64) -> Option<Complex64> {
        None
    }
}

/// Closed form that can be evaluated anywhere in the cut plane.
pub struct Analytic<G>(pub G);

impl<G: Fn(Complex64) -> Complex64> Transform for Analytic<G> {
    fn real(&self, s: f64) -> f64 {
        (self.0)(Complex64::new(s, 0.0)).re
    }
    fn complex(&self, s: Complex64) -> Option<Complex64> {
        Some((self.0)(s))
    }
}

/// Transform known on the positive real axis only.
pub struct RealAxis<F>(pub F);

impl<F: Fn(f64) -> f64> Transform for RealAxis<F> {
    fn real(&self, s: f64) -> f64 {
        (self.0)(s)
    }
}

/// Inverse transform at `t` using the configured method.
pub fn invert(f: &dyn Transform, t: f64, cfg: &TransformSettings) -> Result<f64> {
    cfg.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("inversion requires t > 0, got {t}")));
    }
    match cfg.invert_method {
        InvertMethod::GaverStehfest => gaver_stehfest(|s| f.real(s), t, cfg.gs_terms),
        InvertMethod::Talbot => {
            if f.complex(Complex64::new(1.0, 1.0)).is_none() {
                return Err(Error::InvalidParameter(
                    "talbot inversion needs a transform defined at complex arguments".into(),
                ));
            }
            talbot(|s| f.complex(s).expect("checked above"), t, cfg.talbot_nodes)
        }
    }
}

/// Fixed-contour Talbot inversion on the cotangent contour with midpoint nodes.
pub fn talbot<G: Fn(Complex64) -> Complex64>(g: G, t: f64, nodes: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("inversion requires t > 0, got {t}")));
    }
    let n = nodes as f64;
    let (a, b, c, d) = (0.5017, 0.6407, 0.6122, 0.2645);
    let mut acc = Complex64::new(0.0, 0.0);
    // conjugate symmetry: only the upper half of the contour is evaluated
    for k in nodes / 2..nodes {
        let th = -std::f64::consts::PI + (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / n;
        let cot = (b * th).cos() / (b * th).sin();
        let sn = (b * th).sin();
        let w = Complex64::new(n * (a * th * cot - c), n * d * th);
        let dw = Complex64::new(n * (a * cot - a * b * th / (sn * sn)), n * d);
        let val = g(w / t);
        acc += w.exp() * val * dw;
    }
    // Re(acc/(i n t))
    let res = 2.0 * acc.im / (n * t);
    if res.is_finite() {
        Ok(res)
    } else {
        Err(Error::Inversion(format!("talbot sum is not finite at t = {t}")))
    }
}

fn stehfest_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, j| a * j as f64);
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                v += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Gaver-Stehfest inversion from real-axis samples.
///
/// The result is compared with the `n − 2` term estimate; a large disagreement
/// means the acceleration is oscillating and is reported as an error.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(f: F, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("inversion requires t > 0, got {t}")));
    }
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("gs_terms must be even and at least 8, got {n}")));
    }
    let h = LN_2 / t;
    let samples: Vec<f64> = (1..=n).map(|k| f(k as f64 * h)).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Inversion(format!("transform not finite on the Stehfest nodes at t = {t}")));
    }
    let est = |m: usize| -> (f64, f64) {
        let v = stehfest_coefficients(m);
        let terms = v.iter().zip(&samples).map(|(a, b)| a * b);
        let (s, sabs) = terms.fold((0.0, 0.0), |(s, a), x| (s + x, a + x.abs()));
        (s * h, sabs * h)
    };
    let (hi, scale) = est(n);
    let (lo, _) = est(n - 2);
    let diff = (hi - lo).abs();
    if diff > 1e-2 * hi.abs() + 1e-12 * scale {
        return Err(Error::Inversion(format!(
            "Gaver-Stehfest estimates disagree at t = {t}: {hi:e} with {n} terms, {lo:e} with {} terms",
            n - 2
        )));
    }
    Ok(hi)
}

/// `w + ∫₀^∞ e^(−st) g(t) dt` for the generalized function `w·δ + g`.
pub fn forward(f: &GeneralizedFunction, s: f64, cfg: &TransformSettings) -> Result<f64> {
    cfg.validate()?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("forward transform requires s > 0, got {s}")));
    }
    let tol = cfg.forward_rel_tol;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let eval = |t: f64| -> f64 {
        match f.regular(t) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let check = |v: f64| -> Result<f64> {
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("forward transform not finite at s = {s}")))
        }
    };

    let eps = (0.1 / s).min(0.1);
    let gam = f.sing_exponent;
    let c = f.sing_coefficient;
    let lead = if c != 0.0 { c * s.powf(-gam) * gamma_p(gam, s * eps) } else { 0.0 };
    let (rem, _) = tanh_sinh(
        |t, _, _| (-s * t).exp() * (eval(t) - f.leading(t)),
        0.0,
        eps,
        tol * 1e-2,
    )?;
    let head = check(lead + rem)?;

    let mut total = head;
    let mut a = eps;
    let mut end = eps + 40.0 / s;
    for _ in 0..6 {
        while a < end {
            let b = (2.0 * a).min(end);
            let abs_tol = 1e-3 * tol * total.abs().max(1e-300);
            let (v, _) = adaptive_gk(|t| (-s * t).exp() * eval(t), a, b, abs_tol, tol * 1e-2)?;
            total += check(v)?;
            a = b;
        }
        let edge = (eval(end) * (-s * end).exp()).abs() / s;
        check(edge)?;
        if edge <= tol * 1e-2 * total.abs().max(1e-300) {
            return Ok(f.delta_weight + total);
        }
        end *= 2.0;
    }
    Err(Error::Numerical(format!(
        "forward transform at s = {s} does not converge; the regular part decays too slowly"
    )))
}
