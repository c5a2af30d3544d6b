//! Type-level network utility maximization.
//!
//! Utility and influence are separable across resources, so the dual
//! decouples: each shadow price is found by bisection on that resource's
//! aggregate demand, which is nonincreasing in the price. Per-type
//! allocations are closed-form best responses to the prices.

mod best_response;
mod kkt;
mod sensitivity;
mod tnum;

pub use best_response::{best_response, best_response_scalar};
pub use kkt::{kkt_residual, kkt_residual_weighted};
pub use sensitivity::{price_sensitivity, price_sensitivity_weighted, sensitivity_norm_bound_check, NormBoundCheck, SensitivityResult};
pub use tnum::{
    Boxes,
    aggregate_demand, objective, solve_boxed, solve_num_finite, solve_tnum, solve_weighted, FiniteSolution,
};

use crate::exec::Exec;

/// Tolerances for the bisection solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative tolerance on `|Σ ρ f − C| / C` at a binding constraint.
    pub price_tolerance: f64,
    /// Tolerance on the per-type stationarity residual.
    pub stationarity_tolerance: f64,
    pub max_bisection_iters: usize,
    /// How callers fan out independent solves.
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            price_tolerance: 1e-10,
            stationarity_tolerance: 1e-10,
            max_bisection_iters: 200,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// Optimal per-type allocations and shadow prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution {
    /// `z[r][n]`, row-major type index `r`.
    pub z: Vec<Vec<f64>>,
    /// Shadow prices, one per resource.
    pub p: Vec<f64>,
    pub kkt_residual: f64,
    /// `C_n − Σ_r w_r f(z_{r,n})`.
    pub constraint_slack: Vec<f64>,
    /// Bisection steps summed over resources.
    pub iterations: usize,
}

impl PrimalDualSolution {
    /// Resources whose price is positive.
    pub fn binding(&self) -> Vec<bool> {
        self.p.iter().map(|p| *p > 0.0).collect()
    }

    pub fn all_binding(&self) -> bool {
        self.p.iter().all(|p| *p > 0.0)
    }
}
