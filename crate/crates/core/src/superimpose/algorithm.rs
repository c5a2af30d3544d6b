use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::model::{Scenario, TypePair};
use crate::solver::best_response;

/// Play the best response of `impersonated_type` in every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub impersonated_type: TypePair,
}

impl Action {
    pub fn obey(own: TypePair) -> Self {
        Action { impersonated_type: own }
    }
}

/// The prescribed action of every joint type.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule {
    pub prescribed_action: Vec<Action>,
}

impl DecisionRule {
    /// Each type plays its own best response.
    pub fn obedient(scenario: &Scenario) -> Self {
        DecisionRule {
            prescribed_action: scenario.pairs().map(Action::obey).collect(),
        }
    }

    pub fn actions_for(&self, scenario: &Scenario, agents: &[TypePair]) -> Vec<Action> {
        agents
            .iter()
            .map(|t| self.prescribed_action[scenario.type_space.index(*t)])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmConfig {
    /// Initial step `γ₀`; `None` uses `1 / max_n Σ_r ρ_r a_{r,n}`.
    pub step0: Option<f64>,
    /// Stop when `|Σ f − I C_n| / (I C_n) ≤ tolerance` on every priced
    /// resource (excess at most this on a free one).
    pub tolerance: f64,
    pub max_rounds: usize,
    /// Keep every agent's reply in the trace.
    pub record_demands: bool,
    pub exec: Exec,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            step0: None,
            tolerance: 1e-8,
            max_rounds: 100_000,
            record_demands: false,
            exec: Exec::default(),
        }
    }
}

/// One exchange: the posted prices and the replies to them.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub prices: Vec<f64>,
    /// Per-agent replies, when recorded.
    pub demands: Option<Vec<Vec<f64>>>,
    /// `(Σ_i f_i − I C_n) / I` per resource.
    pub excess: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmTrace {
    pub rounds: Vec<Round>,
    pub final_prices: Vec<f64>,
    pub final_allocations: Vec<Vec<f64>>,
    /// Type each agent played.
    pub played: Vec<TypePair>,
    pub converged: bool,
    pub rounds_used: usize,
}

fn default_step(scenario: &Scenario) -> f64 {
    let slope = (0..scenario.num_resources())
        .map(|n| {
            scenario
                .pairs()
                .enumerate()
                .map(|(r, t)| scenario.population.share(r) * scenario.influence.coefficients(t.zeta, n).0)
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    1.0 / slope
}

/// Synchronous price broadcast with projected steps `γ₀/√k` on the
/// per-capita excess demand. Prices stay in `[0, max w/a]`, the range that
/// contains every equilibrium price.
pub fn run_algorithm(actions: &[Action], scenario: &Scenario, config: &AlgorithmConfig) -> Result<AlgorithmTrace> {
    if actions.is_empty() {
        return Err(Error::validation("actions", "no agents"));
    }
    for a in actions {
        scenario.type_space.check(a.impersonated_type)?;
    }
    let num_resources = scenario.num_resources();
    let agents = actions.len() as f64;
    let step0 = config.step0.unwrap_or_else(|| default_step(scenario));
    if !(step0.is_finite() && step0 >= 0.0) {
        return Err(Error::validation("step0", "must be nonnegative"));
    }
    let ceiling: Vec<f64> = (0..num_resources)
        .map(|n| {
            scenario
                .pairs()
                .map(|t| scenario.utility.weight(t.theta, n) / scenario.influence.coefficients(t.zeta, n).0)
                .fold(0.0, f64::max)
        })
        .collect();

    let mut prices = vec![0.0; num_resources];
    let mut rounds = Vec::new();
    let mut k = 0usize;
    loop {
        let replies: Vec<Vec<f64>> = exec::map(config.exec, actions, |a| best_response(scenario, a.impersonated_type, &prices));
        let mut load = vec![0.0; num_resources];
        for (a, x) in actions.iter().zip(&replies) {
            for n in 0..num_resources {
                load[n] += scenario.influence.eval(a.impersonated_type.zeta, n, x[n]);
            }
        }
        let excess: Vec<f64> = (0..num_resources).map(|n| load[n] / agents - scenario.capacities[n]).collect();
        let settled = (0..num_resources).all(|n| {
            let rel = excess[n] / scenario.capacities[n];
            if prices[n] > 0.0 {
                rel.abs() <= config.tolerance
            } else {
                rel <= config.tolerance
            }
        });
        rounds.push(Round {
            prices: prices.clone(),
            demands: config.record_demands.then(|| replies.clone()),
            excess: excess.clone(),
        });
        if settled || k >= config.max_rounds {
            return Ok(AlgorithmTrace {
                rounds,
                final_prices: prices,
                final_allocations: replies,
                played: actions.iter().map(|a| a.impersonated_type).collect(),
                converged: settled,
                rounds_used: k,
            });
        }
        k += 1;
        let step = step0 / (k as f64).sqrt();
        for n in 0..num_resources {
            prices[n] = (prices[n] + step * excess[n]).clamp(0.0, ceiling[n]);
        }
    }
}
