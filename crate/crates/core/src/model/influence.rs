use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic influence `f_{ζ,n}(x) = a·x + b·x²` with `a > 0`, `b ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    /// `linear[ζ][n]` (the `a` coefficients).
    pub linear: Vec<Vec<f64>>,
    /// `quadratic[ζ][n]` (the `b` coefficients).
    pub quadratic: Vec<Vec<f64>>,
}

impl InfluenceParams {
    pub fn new(linear: Vec<Vec<f64>>, quadratic: Vec<Vec<f64>>) -> Result<Self> {
        let f = InfluenceParams { linear, quadratic };
        f.validate()?;
        Ok(f)
    }

    /// Identity influence `f(x) = x` for `num_zeta` configurations.
    pub fn identity(num_zeta: usize, num_resources: usize) -> Self {
        InfluenceParams {
            linear: vec![vec![1.0; num_resources]; num_zeta],
            quadratic: vec![vec![0.0; num_resources]; num_zeta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.linear.is_empty() {
            return Err(Error::validation("influence.linear", "no rows"));
        }
        if self.linear.len() != self.quadratic.len() {
            return Err(Error::validation("influence.quadratic", "row count differs from linear"));
        }
        let width = self.linear[0].len();
        for (z, (a, b)) in self.linear.iter().zip(&self.quadratic).enumerate() {
            if a.len() != width || b.len() != width || width == 0 {
                return Err(Error::validation("influence", format!("row {z} has wrong length")));
            }
            if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::validation("influence.linear", format!("row {z} needs entries > 0")));
            }
            if b.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation("influence.quadratic", format!("row {z} needs entries ≥ 0")));
            }
        }
        Ok(())
    }

    pub fn num_zeta(&self) -> usize {
        self.linear.len()
    }

    #[inline]
    pub fn coefficients(&self, zeta: usize, n: usize) -> (f64, f64) {
        (self.linear[zeta][n], self.quadratic[zeta][n])
    }

    pub fn value(&self, zeta: usize, n: usize, x: f64) -> Result<f64> {
        check(x)?;
        Ok(self.eval(zeta, n, x))
    }

    pub fn derivative(&self, zeta: usize, n: usize, x: f64) -> Result<f64> {
        check(x)?;
        Ok(self.eval_derivative(zeta, n, x))
    }

    /// Lower derivative bound `L_f = min a`; with `b ≥ 0` it holds on all of `x ≥ 0`.
    pub fn lower_slope(&self) -> f64 {
        self.linear
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub(crate) fn eval(&self, zeta: usize, n: usize, x: f64) -> f64 {
        let (a, b) = self.coefficients(zeta, n);
        x * (a + b * x)
    }

    #[inline]
    pub(crate) fn eval_derivative(&self, zeta: usize, n: usize, x: f64) -> f64 {
        let (a, b) = self.coefficients(zeta, n);
        a + 2.0 * b * x
    }
}

fn check(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("influence argument {x} < 0")))
    }
}
