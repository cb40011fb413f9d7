use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// `P(x) = Σ aᵢxᵢ² + Σ bᵢxᵢ + c + ε|x|⁴`.
///
/// The quartic term is a regularizer used to make the density integrable while
/// continuing towards the quadratic limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPolynomial {
    pub a: [f64; 3],
    #[serde(default)]
    pub b: [f64; 3],
    pub c: f64,
    #[serde(default)]
    pub eps_quartic: f64,
}

impl QuadraticPolynomial {
    pub fn new(a: [f64; 3], b: [f64; 3], c: f64, eps_quartic: f64) -> Self {
        Self { a, b, c, eps_quartic }
    }

    pub fn constant(c: f64) -> Self {
        Self::new([0.0; 3], [0.0; 3], c, 0.0)
    }

    /// `c + a|x|²`.
    pub fn isotropic(c: f64, a: f64) -> Self {
        Self::new([a; 3], [0.0; 3], c, 0.0)
    }

    pub fn with_quartic(mut self, eps: f64) -> Self {
        self.eps_quartic = eps;
        self
    }

    pub fn evaluate(&self, x: [f64; 3]) -> f64 {
        let mut sum = self.c;
        let mut r2 = 0.0;
        for i in 0..3 {
            sum += (self.a[i] * x[i] + self.b[i]) * x[i];
            r2 += x[i] * x[i];
        }
        sum + self.eps_quartic * r2 * r2
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        let mut g = [0.0; 3];
        for i in 0..3 {
            g[i] = 2.0 * self.a[i] * x[i] + self.b[i] + 4.0 * self.eps_quartic * r2 * x[i];
        }
        g
    }

    /// `2x·∇P(x) − P(x)`, the integrand weight in the Pohozaev identity.
    pub fn dilation_term(&self, x: [f64; 3]) -> f64 {
        let g = self.gradient(x);
        let dot: f64 = (0..3).map(|i| x[i] * g[i]).sum();
        2.0 * dot - self.evaluate(x)
    }

    pub fn laplacian(&self, x: [f64; 3]) -> f64 {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        2.0 * self.a.iter().sum::<f64>() + 20.0 * self.eps_quartic * r2
    }

    /// `Δ²P`, constant for this family.
    pub fn bilaplacian(&self) -> f64 {
        120.0 * self.eps_quartic
    }

    pub fn is_even(&self) -> bool {
        self.b.iter().all(|&b| b == 0.0)
    }

    pub fn is_radial(&self) -> bool {
        self.is_even() && self.a[0] == self.a[1] && self.a[1] == self.a[2]
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.is_even() && self.a[1] == self.a[2]
    }

    /// Minimum of the quadratic part `Σ aᵢxᵢ² + bᵢxᵢ + c`, or `None` if it is
    /// unbounded below. The quartic term is non-negative, so a positive value is
    /// sufficient for `P > 0`.
    pub fn quadratic_minimum(&self) -> Option<f64> {
        let mut m = self.c;
        for i in 0..3 {
            if self.a[i] > 0.0 {
                m -= self.b[i] * self.b[i] / (4.0 * self.a[i]);
            } else if self.a[i] < 0.0 || self.b[i] != 0.0 {
                return None;
            }
        }
        Some(m)
    }

    pub fn check_positive(&self) -> Result<(), ConfigError> {
        if self.eps_quartic < 0.0 {
            return Err(ConfigError::PolynomialNotPositive(format!(
                "quartic coefficient {} is negative",
                self.eps_quartic
            )));
        }
        match self.quadratic_minimum() {
            Some(m) if m > 0.0 => Ok(()),
            Some(m) => Err(ConfigError::PolynomialNotPositive(format!(
                "minimum of the quadratic part is {m}"
            ))),
            None => Err(ConfigError::PolynomialNotPositive(
                "quadratic part is unbounded below".into(),
            )),
        }
    }

    /// Smallest polynomial growth order of `P` over all directions: 4 with a
    /// quartic term, 2 if every `aᵢ > 0`, otherwise 0.
    pub fn growth_order(&self) -> u32 {
        if self.eps_quartic > 0.0 {
            4
        } else if self.a.iter().all(|&a| a > 0.0) {
            2
        } else {
            0
        }
    }

    /// Constant `C` with `P(x) ≥ C|x|^k` for the growth order `k`.
    pub fn growth_constant(&self) -> f64 {
        match self.growth_order() {
            4 => self.eps_quartic,
            2 => self.a.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => self.quadratic_minimum().unwrap_or(0.0).max(0.0),
        }
    }
}
