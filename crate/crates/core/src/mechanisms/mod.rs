//! Allocation-and-payment mechanisms on top of the type-level solver.
//!
//! [`vcg_exact`] is the externality-pricing oracle that re-solves the program
//! once per excluded agent. [`large_scale_vcg`] charges each agent the shadow
//! price of its monitored load minus a per-capita rebate, which needs a
//! single solve. [`large_scale_vcg_mean_field`] is the same rule in the
//! continuum limit, where a unilateral deviation leaves prices unchanged.

mod audit;
mod exact;
mod large_scale;

pub use audit::{budget_audit, ir_audit, BudgetAudit};
pub use exact::{shadow_payment_gap, vcg_exact, EXACT_VCG_MAX_AGENTS};
pub use large_scale::{
    large_scale_vcg, large_scale_vcg_mean_field, mean_field_dsic_margin, shadow_price_payment, shadow_price_payoff,
};

use crate::model::{Report, TypePair};

/// Allocations, payments and payoffs produced by a mechanism.
///
/// Each entry is one agent, or one type of a continuum population; `mass`
/// holds the agent's weight in aggregate sums (1 for an agent, the share
/// for a type in the continuum limit).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub true_types: Vec<TypePair>,
    pub reports: Vec<Report>,
    pub allocations: Vec<Vec<f64>>,
    pub payments: Vec<f64>,
    pub prices: Vec<f64>,
    /// Utility at the true preference minus payment.
    pub payoffs: Vec<f64>,
    pub mass: Vec<f64>,
    pub beta: f64,
}

impl Outcome {
    pub fn num_agents(&self) -> usize {
        self.payments.len()
    }

    /// `Σ_i mass_i h_i`.
    pub fn total_payments(&self) -> f64 {
        self.payments.iter().zip(&self.mass).map(|(h, m)| m * h).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}
