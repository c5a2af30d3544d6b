//! Finite-population incentives to misreport under the shadow-price
//! mechanism.
//!
//! With `I` agents the reported distribution moves by `1/I` when one agent
//! lies, which shifts the prices; the gain from lying is measured by
//! re-solving at the shifted distribution. In the continuum limit prices do
//! not react and truth-telling is dominant.

mod bound;
mod sampled;

pub use bound::{log_log_slope, incentive_bound, verify_epsilon_ic, EpsilonIcRow, EpsilonIcTable};
pub use sampled::{sampled_opponent_gaps, SampledGap};

use crate::error::{Error, Result};
use crate::exec;
use crate::mechanisms::shadow_price_payoff;
use crate::model::{AgentCount, Population, Scenario};
use crate::solver::{solve_tnum, solve_weighted, SolverConfig};

/// Best gain from a unilateral misreport, per true type.
#[derive(Debug, Clone, PartialEq)]
pub struct IncentiveReport {
    /// Gain floored at zero, indexed by joint type.
    pub per_type_gap: Vec<f64>,
    /// Most profitable misreport of each type, if any report beats the truth.
    pub best_misreport: Vec<Option<usize>>,
    pub max_gap: f64,
    /// The closed-form bound for this population (0 in the continuum limit).
    pub epsilon_bound: f64,
    pub num_agents: AgentCount,
}

/// Gains from moving one agent of type `truth` to report `lie`, measured
/// with the integer head counts `counts` (all truthful before the move).
pub(crate) fn deviation_gain(
    scenario: &Scenario,
    counts: &[u64],
    truth: usize,
    lie: usize,
    honest_payoff: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    let mut moved = counts.to_vec();
    moved[truth] -= 1;
    moved[lie] += 1;
    let shares: Vec<f64> = moved.iter().map(|c| *c as f64 / total as f64).collect();
    let sol = solve_weighted(scenario, &shares, &scenario.capacities, config)?;
    let space = &scenario.type_space;
    Ok(shadow_price_payoff(scenario, &sol, scenario.beta, space.pair(truth), space.pair(lie)) - honest_payoff)
}

/// Misreport gains on `base_rho` replicated to `num_agents`, opponents
/// truthful. In the continuum limit prices stay at the truthful solution.
pub fn incentive_gap(
    scenario: &Scenario,
    base_rho: &Population,
    num_agents: AgentCount,
    config: &SolverConfig,
) -> Result<IncentiveReport> {
    let rho = base_rho.with_agents(num_agents)?;
    let k = scenario.num_types();
    if rho.num_types() != k {
        return Err(Error::validation("population.shares", "length must be |T|·|Z|"));
    }
    let space = &scenario.type_space;
    let honest = solve_tnum(scenario, &rho, config)?;
    let honest_payoffs: Vec<f64> = (0..k)
        .map(|r| shadow_price_payoff(scenario, &honest, scenario.beta, space.pair(r), space.pair(r)))
        .collect();

    let moves: Vec<(usize, usize)> = match rho.counts() {
        Some(ref counts) => (0..k)
            .filter(|r| counts[*r] > 0)
            .flat_map(|r| (0..k).filter(move |l| *l != r).map(move |l| (r, l)))
            .collect(),
        None => (0..k).flat_map(|r| (0..k).filter(move |l| *l != r).map(move |l| (r, l))).collect(),
    };
    let gains = match rho.counts() {
        Some(counts) => exec::try_map(config.exec, &moves, |(r, l)| {
            deviation_gain(scenario, &counts, *r, *l, honest_payoffs[*r], config)
        })?,
        None => moves
            .iter()
            .map(|(r, l)| {
                shadow_price_payoff(scenario, &honest, scenario.beta, space.pair(*r), space.pair(*l)) - honest_payoffs[*r]
            })
            .collect(),
    };

    let mut per_type_gap = vec![0.0; k];
    let mut best_misreport = vec![None; k];
    for ((r, l), g) in moves.iter().zip(gains) {
        if g > per_type_gap[*r] {
            per_type_gap[*r] = g;
            best_misreport[*r] = Some(*l);
        }
    }
    let max_gap = per_type_gap.iter().cloned().fold(0.0, f64::max);
    let epsilon_bound = match num_agents {
        AgentCount::Finite(i) => incentive_bound(scenario, &rho, i)?,
        AgentCount::Infinite => 0.0,
    };
    Ok(IncentiveReport {
        per_type_gap,
        best_misreport,
        max_gap,
        epsilon_bound,
        num_agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InfluenceParams, TypeSpace, UtilityParams};

    fn two_types() -> Scenario {
        Scenario::new(
            TypeSpace::new(2, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0], vec![1.6]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::mean_field(vec![0.5, 0.5]).unwrap(),
            vec![1.0],
            1.0,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn continuum_gaps_vanish() {
        let s = two_types();
        let rep = incentive_gap(&s, &s.population, AgentCount::Infinite, &SolverConfig::default()).unwrap();
        assert!(rep.max_gap <= 1e-9);
    }

    #[test]
    fn single_type_has_no_alternative() {
        let s = Scenario::new(
            TypeSpace::new(1, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::mean_field(vec![1.0]).unwrap(),
            vec![1.0],
            1.0,
            10.0,
        )
        .unwrap();
        let rep = incentive_gap(&s, &s.population, AgentCount::Finite(10), &SolverConfig::default()).unwrap();
        assert_eq!(rep.max_gap, 0.0);
        assert_eq!(rep.best_misreport, vec![None]);
    }

    #[test]
    fn non_integral_population_is_rejected() {
        let s = two_types();
        assert!(incentive_gap(&s, &s.population, AgentCount::Finite(3), &SolverConfig::default()).is_err());
    }

    #[test]
    fn moving_back_restores_prices() {
        let s = two_types();
        let counts = [5u64, 5];
        let there: Vec<u64> = vec![4, 6];
        let back: Vec<u64> = vec![there[0] + 1, there[1] - 1];
        let shares = |c: &[u64]| c.iter().map(|v| *v as f64 / 10.0).collect::<Vec<f64>>();
        assert_eq!(shares(&back), shares(&counts));
        let cfg = SolverConfig::default();
        let a = solve_weighted(&s, &shares(&counts), &s.capacities, &cfg).unwrap();
        let b = solve_weighted(&s, &shares(&back), &s.capacities, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
