use super::{run_algorithm, superimposed_outcome, Action, AlgorithmConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{AgentCount, Scenario, TypePair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObedienceResult {
    pub obedient_payoff: f64,
    pub best_deviation_payoff: f64,
    pub best_deviation: Option<TypePair>,
    /// `obedient − best deviation`; 0 when there is no other action.
    pub margin: f64,
    /// Largest price change caused by any deviation.
    pub max_price_shift: f64,
}

/// Payoff of one agent of `deviator_type` when it impersonates each other
/// type while the rest of the population (the scenario's shares replicated
/// to `num_agents`) obeys.
pub fn obedience_check(scenario: &Scenario, num_agents: u64, deviator_type: TypePair, config: &AlgorithmConfig) -> Result<ObedienceResult> {
    scenario.type_space.check(deviator_type)?;
    let population = scenario.population.with_agents(AgentCount::Finite(num_agents))?;
    let agents = population
        .assignments(&scenario.type_space)
        .expect("finite population");
    let deviator = agents
        .iter()
        .position(|t| *t == deviator_type)
        .ok_or_else(|| Error::validation("deviator_type", "type has no agents"))?;
    let candidates: Vec<TypePair> = std::iter::once(deviator_type)
        .chain(scenario.pairs().filter(|t| *t != deviator_type))
        .collect();
    let runs = exec::try_map(config.exec, &candidates, |played| {
        let mut actions: Vec<Action> = agents.iter().map(|t| Action::obey(*t)).collect();
        actions[deviator] = Action { impersonated_type: *played };
        let trace = run_algorithm(&actions, scenario, config)?;
        let outcome = superimposed_outcome(&trace, &agents, scenario, scenario.beta)?;
        Ok::<_, Error>((outcome.payoffs[deviator], trace.final_prices))
    })?;
    let (obedient_payoff, ref base_prices) = runs[0];
    let mut best_deviation_payoff = f64::NEG_INFINITY;
    let mut best_deviation = None;
    let mut max_price_shift = 0.0f64;
    for (played, (payoff, prices)) in candidates.iter().zip(&runs).skip(1) {
        if *payoff > best_deviation_payoff {
            best_deviation_payoff = *payoff;
            best_deviation = Some(*played);
        }
        for (a, b) in prices.iter().zip(base_prices) {
            max_price_shift = max_price_shift.max((a - b).abs());
        }
    }
    let margin = if best_deviation.is_some() {
        obedient_payoff - best_deviation_payoff
    } else {
        0.0
    };
    Ok(ObedienceResult {
        obedient_payoff,
        best_deviation_payoff,
        best_deviation,
        margin,
        max_price_shift,
    })
}
