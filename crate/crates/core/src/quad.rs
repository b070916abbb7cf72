//! Quadrature rules used by the transforms, checkers and solvers.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

const TS_TMAX: f64 = 6.0;

/// One weighted node of the double-exponential rule at parameter t.
fn ts_node<F>(f: &F, a: f64, b: f64, t: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let u = FRAC_PI_2 * t.sinh();
    let lo = 2.0 / (1.0 + (2.0 * u).exp()); // 1 - tanh(u)
    let hi = 2.0 / (1.0 + (-2.0 * u).exp()); // 1 + tanh(u)
    let dl = half * hi;
    let dr = half * lo;
    if dl <= 0.0 || dr <= 0.0 {
        return 0.0;
    }
    let w = half * FRAC_PI_2 * t.cosh() * hi * lo;
    if w == 0.0 {
        return 0.0;
    }
    let x = if t < 0.0 { a + dl } else { b - dr };
    w * f(x, dl, dr)
}

/// Double-exponential rule on [a, b].
///
/// The integrand receives `(x, x - a, b - x)` with both distances computed
/// without cancellation, so endpoint singularities can be evaluated accurately.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(b > a) {
        return Ok((0.0, 0.0));
    }
    let eval = |t: f64| ts_node(&f, a, b, t);
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= TS_TMAX {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    let mut err = f64::INFINITY;
    for _level in 0..9 {
        h *= 0.5;
        let mut add = 0.0;
        let mut j = 1;
        while j as f64 * h <= TS_TMAX {
            let t = j as f64 * h;
            add += eval(t) + eval(-t);
            j += 2;
        }
        sum += add;
        let next = h * sum;
        err = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            return Err(Error::Numerical("non-finite integrand in tanh-sinh rule".into()));
        }
        if err <= rel_tol * estimate.abs() || err < 1e-300 {
            return Ok((estimate, err));
        }
    }
    Ok((estimate, err))
}

/// The same rule at the fixed step 2^(−level−1), without adaptation.
/// Negative levels give steps coarser than 1/2.
pub fn tanh_sinh_level<F>(f: F, a: f64, b: f64, level: i32) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(b > a) {
        return 0.0;
    }
    let h = 0.5 / 2f64.powi(level);
    let mut sum = ts_node(&f, a, b, 0.0);
    let mut k = 1;
    while k as f64 * h <= TS_TMAX {
        let t = k as f64 * h;
        sum += ts_node(&f, a, b, t) + ts_node(&f, a, b, -t);
        k += 1;
    }
    h * sum
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let legendre = |z: f64| {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
        };
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(z).1;
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed Gauss-Legendre rule mapped onto [a, b].
#[derive(Debug, Clone)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.x
            .iter()
            .zip(&self.w)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration with interval bisection.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
        let err: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("non-finite integrand in adaptive quadrature".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
    let total: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
    let err: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        Ok((total, err))
    } else {
        Err(Error::Numerical(format!(
            "adaptive quadrature did not reach tolerance on [{a}, {b}] (error estimate {err:e})"
        )))
    }
}
