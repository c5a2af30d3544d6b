use super::AlgorithmTrace;
use crate::error::{Error, Result};
use crate::mechanisms::Outcome;
use crate::model::{Scenario, TypePair};

/// Payments `h_i = Σ_n λ_n [f_{ζ_i,n}(x_i) − β C_n]` computed from the
/// trace's final prices and allocations and the agents' true configurations.
pub fn superimposed_outcome(trace: &AlgorithmTrace, true_types: &[TypePair], scenario: &Scenario, beta: f64) -> Result<Outcome> {
    if !trace.converged {
        return Err(Error::Solver {
            message: format!("algorithm stopped after {} rounds without converging", trace.rounds_used),
            residual: trace
                .rounds
                .last()
                .map(|r| r.excess.iter().fold(0.0f64, |a, e| a.max(e.abs())))
                .unwrap_or(f64::INFINITY),
        });
    }
    if true_types.len() != trace.final_allocations.len() {
        return Err(Error::validation("true_types", "one type per agent is required"));
    }
    let prices = &trace.final_prices;
    let payments: Vec<f64> = true_types
        .iter()
        .zip(&trace.final_allocations)
        .map(|(t, x)| {
            (0..scenario.num_resources())
                .map(|n| prices[n] * (scenario.influence.eval(t.zeta, n, x[n]) - beta * scenario.capacities[n]))
                .sum()
        })
        .collect();
    let payoffs = true_types
        .iter()
        .zip(&trace.final_allocations)
        .zip(&payments)
        .map(|((t, x), h)| scenario.utility.value(t.theta, x).map(|u| u - h))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Outcome {
        true_types: true_types.to_vec(),
        reports: trace.played.clone(),
        allocations: trace.final_allocations.clone(),
        payments,
        prices: prices.clone(),
        payoffs,
        mass: vec![1.0; true_types.len()],
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::large_scale_vcg;
    use crate::model::{AgentCount, InfluenceParams, Population, TypeSpace, UtilityParams};
    use crate::solver::SolverConfig;
    use crate::superimpose::{run_algorithm, AlgorithmConfig, DecisionRule};

    fn two_types() -> Scenario {
        Scenario::new(
            TypeSpace::new(2, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0], vec![1.5]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::new(vec![0.5, 0.5], AgentCount::Finite(10)).unwrap(),
            vec![1.0],
            1.0,
            50.0,
        )
        .unwrap()
    }

    #[test]
    fn obedient_payments_match_large_scale() {
        let s = two_types();
        let agents = s.population.assignments(&s.type_space).unwrap();
        let actions = DecisionRule::obedient(&s).actions_for(&s, &agents);
        let trace = run_algorithm(&actions, &s, &AlgorithmConfig::default()).unwrap();
        let over = superimposed_outcome(&trace, &agents, &s, 1.0).unwrap();
        let direct = large_scale_vcg(&agents, &agents, &s, &SolverConfig::default()).unwrap();
        for (a, b) in over.payments.iter().zip(&direct.payments) {
            assert!((a - b).abs() <= 2e-3);
        }
        assert!(over.total_payments().abs() <= 1e-3);
    }

    #[test]
    fn equal_outputs_equal_payments() {
        let s = two_types();
        let agents = s.population.assignments(&s.type_space).unwrap();
        let actions = DecisionRule::obedient(&s).actions_for(&s, &agents);
        let trace = run_algorithm(&actions, &s, &AlgorithmConfig::default()).unwrap();
        let mut other = trace.clone();
        other.rounds.truncate(1);
        other.rounds_used = 0;
        let a = superimposed_outcome(&trace, &agents, &s, 1.0).unwrap();
        let b = superimposed_outcome(&other, &agents, &s, 1.0).unwrap();
        assert_eq!(a.payments, b.payments);
    }

    #[test]
    fn unconverged_trace_is_rejected() {
        let s = two_types();
        let agents = s.population.assignments(&s.type_space).unwrap();
        let actions = DecisionRule::obedient(&s).actions_for(&s, &agents);
        let cfg = AlgorithmConfig {
            max_rounds: 2,
            ..AlgorithmConfig::default()
        };
        let trace = run_algorithm(&actions, &s, &cfg).unwrap();
        assert!(superimposed_outcome(&trace, &agents, &s, 1.0).is_err());
    }
}
