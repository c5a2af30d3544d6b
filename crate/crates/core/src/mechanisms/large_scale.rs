use super::Outcome;
use crate::error::{Error, Result};
use crate::model::{empirical_population, Population, Report, Scenario, TypePair};
use crate::solver::{solve_tnum, PrimalDualSolution, SolverConfig};

/// `Σ_n p_n [f_{ζ,n}(x_n) − β C_n]` with the influence of the true
/// configuration `zeta` and the per-capita rebate.
pub fn shadow_price_payment(scenario: &Scenario, prices: &[f64], beta: f64, zeta: usize, x: &[f64]) -> f64 {
    (0..scenario.num_resources())
        .map(|n| prices[n] * (scenario.influence.eval(zeta, n, x[n]) - beta * scenario.capacities[n]))
        .sum()
}

/// Payoff of an agent of type `truth` that reports `report`, at the prices
/// and allocations of `solution`.
pub fn shadow_price_payoff(scenario: &Scenario, solution: &PrimalDualSolution, beta: f64, truth: TypePair, report: Report) -> f64 {
    let x = &solution.z[scenario.type_space.index(report)];
    scenario.utility_of(truth.theta, x) - shadow_price_payment(scenario, &solution.p, beta, truth.zeta, x)
}

fn check_lengths(reports: &[Report], true_types: &[TypePair], scenario: &Scenario) -> Result<()> {
    if reports.len() != true_types.len() {
        return Err(Error::validation("reports", "one report per agent is required"));
    }
    for t in true_types {
        if !scenario.type_space.contains(*t) {
            return Err(Error::validation("true_types", format!("type {t:?} outside the type space")));
        }
    }
    Ok(())
}

pub(super) fn assemble(
    scenario: &Scenario,
    true_types: &[TypePair],
    reports: &[Report],
    allocations: Vec<Vec<f64>>,
    payments: Vec<f64>,
    prices: Vec<f64>,
    mass: Vec<f64>,
    beta: f64,
) -> Outcome {
    let payoffs = true_types
        .iter()
        .zip(&allocations)
        .zip(&payments)
        .map(|((t, x), h)| scenario.utility_of(t.theta, x) - h)
        .collect();
    Outcome {
        true_types: true_types.to_vec(),
        reports: reports.to_vec(),
        allocations,
        payments,
        prices,
        payoffs,
        mass,
        beta,
    }
}

/// Shadow-price mechanism for a finite agent list.
pub fn large_scale_vcg(reports: &[Report], true_types: &[TypePair], scenario: &Scenario, config: &SolverConfig) -> Result<Outcome> {
    check_lengths(reports, true_types, scenario)?;
    let reported = empirical_population(&scenario.type_space, reports)?;
    let solution = solve_tnum(scenario, &reported, config)?;
    let allocations: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| solution.z[scenario.type_space.index(*r)].clone())
        .collect();
    let payments = true_types
        .iter()
        .zip(&allocations)
        .map(|(t, x)| shadow_price_payment(scenario, &solution.p, scenario.beta, t.zeta, x))
        .collect();
    Ok(assemble(
        scenario,
        true_types,
        reports,
        allocations,
        payments,
        solution.p,
        vec![1.0; reports.len()],
        scenario.beta,
    ))
}

/// Shadow-price mechanism on a continuum population that reports the
/// distribution `reported` truthfully: one outcome entry per type, with the
/// type's share as its mass.
pub fn large_scale_vcg_mean_field(scenario: &Scenario, reported: &Population, config: &SolverConfig) -> Result<Outcome> {
    let solution = solve_tnum(scenario, reported, config)?;
    let types: Vec<TypePair> = scenario.pairs().collect();
    let payments = types
        .iter()
        .zip(&solution.z)
        .map(|(t, x)| shadow_price_payment(scenario, &solution.p, scenario.beta, t.zeta, x))
        .collect();
    Ok(assemble(
        scenario,
        &types,
        &types,
        solution.z.clone(),
        payments,
        solution.p,
        reported.shares().to_vec(),
        scenario.beta,
    ))
}

/// `min_r [payoff(truth r) − max_{r'} payoff(report r')]` at prices frozen
/// at the truthful solution. Nonnegative when truth-telling is dominant.
pub fn mean_field_dsic_margin(scenario: &Scenario, config: &SolverConfig) -> Result<f64> {
    let solution = solve_tnum(scenario, &scenario.population, config)?;
    let types: Vec<TypePair> = scenario.pairs().collect();
    let mut margin = f64::INFINITY;
    for truth in &types {
        let honest = shadow_price_payoff(scenario, &solution, scenario.beta, *truth, *truth);
        let best = types
            .iter()
            .map(|r| shadow_price_payoff(scenario, &solution, scenario.beta, *truth, *r))
            .fold(f64::NEG_INFINITY, f64::max);
        margin = margin.min(honest - best);
    }
    Ok(margin)
}
