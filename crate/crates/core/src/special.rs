//! Gamma-family helpers shared by the evaluators.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma_abs(x: f64) -> (f64, f64) {
    let (l, sign) = libm::lgamma_r(x);
    (l, if sign < 0 { -1.0 } else { 1.0 })
}

pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// 1/Γ(x), zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 171.0 {
        return (-libm::lgamma(x)).exp();
    }
    if x < -170.0 {
        // reflection: 1/Γ(x) = Γ(1−x) sin(πx)/π
        let s = sin_pi(x);
        let l = libm::lgamma(1.0 - x) + (s.abs() / PI).ln();
        return s.signum() * l.exp();
    }
    1.0 / libm::tgamma(x)
}

/// ln|1/Γ(x)| and its sign; the sign is 0 at the poles.
pub fn ln_rgamma(x: f64) -> (f64, f64) {
    if is_nonpositive_integer(x) {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (l, s) = ln_gamma_abs(x);
    (-l, s)
}

pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Lower incomplete gamma γ(a, x) divided by Γ(a).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}

/// Upper incomplete gamma Γ(a, x) divided by Γ(a).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(a, x)
}

pub fn binom_rising(lambda: f64, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, k| acc * (lambda + k as f64))
}
