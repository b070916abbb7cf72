use crate::error::{Error, Result};
use crate::special::rgamma;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

pub type RegularFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
pub type TransformFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A causal time-domain object: `w·δ(t) + g(t)` where `g(t) ~ c·t^(γ−1)/Γ(γ)` as t→0⁺.
///
/// `transform`, when present, is the Laplace transform of the whole object
/// (delta included) and may be evaluated off the real axis.
#[derive(Clone)]
pub struct GeneralizedFunction {
    pub delta_weight: f64,
    pub sing_exponent: f64,
    pub sing_coefficient: f64,
    regular: RegularFn,
    transform: Option<TransformFn>,
}

impl GeneralizedFunction {
    pub fn new<F>(delta_weight: f64, sing_exponent: f64, sing_coefficient: f64, regular: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        if !(sing_exponent > 0.0 && sing_exponent <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "singular exponent must lie in (0, 1], got {sing_exponent}"
            )));
        }
        if !delta_weight.is_finite() || !sing_coefficient.is_finite() {
            return Err(Error::InvalidParameter("delta weight and singular coefficient must be finite".into()));
        }
        Ok(Self {
            delta_weight,
            sing_exponent,
            sing_coefficient,
            regular: Arc::new(regular),
            transform: None,
        })
    }

    pub fn with_transform<G>(mut self, g: G) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        self.transform = Some(Arc::new(g));
        self
    }

    /// `c·t^(γ−1)/Γ(γ)` with its exact transform `c·s^(−γ)`.
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        let g = rgamma(exponent);
        Ok(Self::new(0.0, exponent, coefficient, move |t| Ok(coefficient * t.powf(exponent - 1.0) * g))?
            .with_transform(move |s| coefficient * s.powf(-exponent)))
    }

    pub fn delta(weight: f64) -> Self {
        Self::new(weight, 1.0, 0.0, |_| Ok(0.0))
            .expect("valid")
            .with_transform(move |_| Complex64::new(weight, 0.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0.0, 1.0, c, move |_| Ok(c))
            .expect("valid")
            .with_transform(move |s| c / s)
    }

    pub fn exponential(c: f64, rate: f64) -> Self {
        Self::new(0.0, 1.0, c, move |t| Ok(c * (-rate * t).exp()))
            .expect("valid")
            .with_transform(move |s| c / (s + rate))
    }

    /// Pointwise value of the non-delta part.
    pub fn regular(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("regular part is evaluated for t > 0, got {t}")));
        }
        (self.regular)(t)
    }

    /// Declared leading term `c·t^(γ−1)/Γ(γ)`.
    pub fn leading(&self, t: f64) -> f64 {
        if self.sing_coefficient == 0.0 {
            return 0.0;
        }
        self.sing_coefficient * t.powf(self.sing_exponent - 1.0) * rgamma(self.sing_exponent)
    }

    pub fn is_singular(&self) -> bool {
        self.sing_coefficient != 0.0 && self.sing_exponent < 1.0
    }

    pub fn has_transform(&self) -> bool {
        self.transform.is_some()
    }

    pub fn transform(&self, s: Complex64) -> Option<Complex64> {
        self.transform.as_ref().map(|g| g(s))
    }

    pub fn regular_fn(&self) -> RegularFn {
        self.regular.clone()
    }
}

impl fmt::Debug for GeneralizedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedFunction")
            .field("delta_weight", &self.delta_weight)
            .field("sing_exponent", &self.sing_exponent)
            .field("sing_coefficient", &self.sing_coefficient)
            .field("transform", &self.transform.is_some())
            .finish()
    }
}
