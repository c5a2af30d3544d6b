use super::Outcome;
use crate::model::Scenario;

/// Aggregate payments against the identity `Σ h = Σ_n p_n (1 − β) C_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetAudit {
    pub total_payments: f64,
    pub predicted: f64,
    /// Every priced resource is exactly at capacity (within `1e-9` relative).
    pub binding: bool,
    pub passes: bool,
}

/// Compare aggregate payments with the shadow-price budget identity.
///
/// Capacities are scaled by the outcome's total mass. When a priced
/// constraint has slack, the prediction falls back to
/// `Σ_n p_n [Σ_i f_i − β C_n]`, which holds for any load.
pub fn budget_audit(outcome: &Outcome, scenario: &Scenario) -> BudgetAudit {
    let mass = outcome.total_mass();
    let mut binding = true;
    let mut tight = 0.0;
    let mut loose = 0.0;
    for n in 0..scenario.num_resources() {
        let p = outcome.prices[n];
        let capacity = mass * scenario.capacities[n];
        let load: f64 = outcome
            .true_types
            .iter()
            .zip(&outcome.allocations)
            .zip(&outcome.mass)
            .map(|((t, x), m)| m * scenario.influence.eval(t.zeta, n, x[n]))
            .sum();
        if p > 0.0 && (load - capacity).abs() > 1e-9 * capacity {
            binding = false;
        }
        tight += p * (1.0 - outcome.beta) * capacity;
        loose += p * (load - outcome.beta * capacity);
    }
    let predicted = if binding { tight } else { loose };
    let total_payments = outcome.total_payments();
    BudgetAudit {
        total_payments,
        predicted,
        binding,
        passes: (total_payments - predicted).abs() <= 1e-8 * predicted.abs().max(1.0),
    }
}

/// Smallest payoff over agents with positive mass.
pub fn ir_audit(outcome: &Outcome) -> f64 {
    outcome
        .payoffs
        .iter()
        .zip(&outcome.mass)
        .filter(|(_, m)| **m > 0.0)
        .map(|(p, _)| *p)
        .fold(f64::INFINITY, f64::min)
}
