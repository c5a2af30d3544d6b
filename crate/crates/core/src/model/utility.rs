use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log utility `U(θ, x) = Σ_n w[θ][n] · ln(1 + x_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    /// `weights[θ][n]`, all strictly positive.
    pub weights: Vec<Vec<f64>>,
}

impl UtilityParams {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let u = UtilityParams { weights };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::validation("utility.weights", "no rows"));
        }
        let width = self.weights[0].len();
        for (t, row) in self.weights.iter().enumerate() {
            if row.len() != width || width == 0 {
                return Err(Error::validation("utility.weights", format!("row {t} has wrong length")));
            }
            if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::validation(
                    "utility.weights",
                    format!("row {t} has non-positive or non-finite weight {w}"),
                ));
            }
        }
        Ok(())
    }

    pub fn num_theta(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, theta: usize, n: usize) -> f64 {
        self.weights[theta][n]
    }

    pub fn value(&self, theta: usize, x: &[f64]) -> Result<f64> {
        check_nonnegative(x)?;
        Ok(self.eval(theta, x))
    }

    pub fn gradient(&self, theta: usize, x: &[f64]) -> Result<Vec<f64>> {
        check_nonnegative(x)?;
        Ok(self.weights[theta]
            .iter()
            .zip(x)
            .map(|(w, xn)| w / (1.0 + xn))
            .collect())
    }

    /// Diagonal of the Hessian, `-w / (1 + x)^2`.
    pub fn hessian_diag(&self, theta: usize, x: &[f64]) -> Vec<f64> {
        self.weights[theta]
            .iter()
            .zip(x)
            .map(|(w, xn)| -w / ((1.0 + xn) * (1.0 + xn)))
            .collect()
    }

    /// Smoothness constant `L_θ = max_n w[θ][n]`, the largest Hessian eigenvalue magnitude.
    pub fn smoothness(&self, theta: usize) -> f64 {
        self.weights[theta].iter().cloned().fold(0.0, f64::max)
    }

    /// Unchecked evaluation for inner loops where `x ≥ 0` is guaranteed.
    #[inline]
    pub(crate) fn eval(&self, theta: usize, x: &[f64]) -> f64 {
        self.weights[theta]
            .iter()
            .zip(x)
            .map(|(w, xn)| w * xn.ln_1p())
            .sum()
    }
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(*v >= 0.0)) {
        Some(i) => Err(Error::Domain(format!("allocation component {i} is {} (< 0)", x[i]))),
        None => Ok(()),
    }
}
