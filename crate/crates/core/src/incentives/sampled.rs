use rand::Rng;

use super::bound::incentive_bound;
use crate::error::Result;
use crate::mechanisms::shadow_price_payoff;
use crate::model::{Population, Scenario};
use crate::solver::{solve_weighted, SolverConfig};

/// Misreport gain of one agent against a random opponent profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGap {
    pub profile: usize,
    pub true_type: usize,
    pub max_gap: f64,
    /// The closed-form bound at the truthful report distribution, undefined
    /// when a type has no reports.
    pub bound: Option<f64>,
}

impl SampledGap {
    pub fn holds(&self) -> Option<bool> {
        self.bound.map(|b| self.max_gap <= b * (1.0 + 1e-6))
    }
}

/// For each of `profiles` random reports of the other `I − 1` agents, the
/// best misreport gain of a deviator of every true type.
pub fn sampled_opponent_gaps<R: Rng>(
    scenario: &Scenario,
    num_agents: u64,
    profiles: usize,
    rng: &mut R,
    config: &SolverConfig,
) -> Result<Vec<SampledGap>> {
    let k = scenario.num_types();
    let space = &scenario.type_space;
    let mut out = Vec::with_capacity(profiles * k);
    for profile in 0..profiles {
        let mut others = vec![0u64; k];
        for _ in 1..num_agents {
            others[rng.gen_range(0..k)] += 1;
        }
        let shares_with = |r: usize| -> Vec<f64> {
            let mut c = others.clone();
            c[r] += 1;
            c.iter().map(|v| *v as f64 / num_agents as f64).collect()
        };
        let solutions = (0..k)
            .map(|r| solve_weighted(scenario, &shares_with(r), &scenario.capacities, config))
            .collect::<Result<Vec<_>>>()?;
        for truth in 0..k {
            let honest = shadow_price_payoff(scenario, &solutions[truth], scenario.beta, space.pair(truth), space.pair(truth));
            let gap = (0..k)
                .filter(|l| *l != truth)
                .map(|l| shadow_price_payoff(scenario, &solutions[l], scenario.beta, space.pair(truth), space.pair(l)) - honest)
                .fold(0.0, f64::max);
            let rho = Population::mean_field(shares_with(truth))?;
            let bound = incentive_bound(scenario, &rho, num_agents).ok();
            out.push(SampledGap {
                profile,
                true_type: truth,
                max_gap: gap,
                bound,
            });
        }
    }
    Ok(out)
}
