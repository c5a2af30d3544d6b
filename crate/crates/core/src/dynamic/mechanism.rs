use super::{continuation_value, largest_remainder, value_u_sigma, DynamicConfig, DynamicScenario, MeanFieldState, Policy};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::AgentCount;
use crate::solver::{best_response_scalar, objective, solve_boxed};

/// One slot of the dynamic mechanism at a reported distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub t: usize,
    /// Reported distribution over preference types.
    pub reported: Vec<f64>,
    /// Bundle of each reported type.
    pub allocations: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    /// Payment of each reported type.
    pub payments: Vec<f64>,
    /// Discounted value minus payment for an agent reporting its true type.
    pub payoffs: Vec<f64>,
}

impl SlotOutcome {
    /// `Σ_θ ρ̃_θ h_θ`.
    pub fn total_payments(&self) -> f64 {
        self.reported.iter().zip(&self.payments).map(|(r, h)| r * h).sum()
    }
}

/// A candidate region for one type: its box, and the continuation it earns there.
struct Region {
    bounds: Vec<(f64, f64)>,
    continuation: f64,
}

fn regions(d: &DynamicScenario, policy: &Policy, theta: usize, t: usize) -> Result<Vec<Region>> {
    let s = &d.static_scenario;
    let k = &d.kernel;
    if k.ignores_allocation(theta) {
        let bins = k.bin(&vec![0.0; s.num_resources()])?;
        return Ok(vec![Region {
            bounds: vec![(0.0, s.z_max); s.num_resources()],
            continuation: continuation_value(d, policy, theta, bins, t)?,
        }]);
    }
    (0..k.num_bins())
        .filter_map(|b| k.bin_box(b, s.z_max).map(|bounds| (b, bounds)))
        .map(|(b, bounds)| {
            Ok(Region {
                bounds,
                continuation: continuation_value(d, policy, theta, b, t)?,
            })
        })
        .collect()
}

/// Allocation, prices and payments of slot `state.t` for the reported
/// distribution `reports`.
///
/// Maximizes `Σ ρ̃ U^σ(θ, z_θ)` under the per-capita capacities, where the
/// continuation part of `U^σ` follows `policy`. Since the continuation is
/// constant on each allocation bin, every combination of bins for the
/// reported types is solved as a boxed concave program and the best kept.
/// Types nobody reports get their value-maximizing response to the prices.
/// The payment is `Σ_n p_n z_n`, less `β C_n p_n` when `config.rebate` is set.
pub fn dynamic_mechanism_step(
    reports: &[f64],
    d: &DynamicScenario,
    policy: &Policy,
    state: &MeanFieldState,
    config: &DynamicConfig,
) -> Result<SlotOutcome> {
    let s = &d.static_scenario;
    let num_theta = d.num_theta();
    let num_resources = d.num_resources();
    let total: f64 = reports.iter().sum();
    if reports.len() != num_theta || reports.iter().any(|r| !(*r >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation("reports", "must be a distribution over preference types"));
    }
    let t = state.t;
    let options: Vec<Vec<Region>> = (0..num_theta).map(|th| regions(d, policy, th, t)).collect::<Result<_>>()?;
    let full = vec![(0.0, s.z_max); num_resources];

    let mut pick = vec![0usize; num_theta];
    let mut best: Option<(f64, crate::solver::PrimalDualSolution)> = None;
    loop {
        let boxes: Vec<Vec<(f64, f64)>> = (0..num_theta)
            .map(|th| if reports[th] > 0.0 { options[th][pick[th]].bounds.clone() } else { full.clone() })
            .collect();
        let feasible = (0..num_resources).all(|n| {
            (0..num_theta).map(|th| reports[th] * boxes[th][n].0).sum::<f64>() <= s.capacities[n]
        });
        if feasible {
            let sol = solve_boxed(s, reports, &s.capacities, Some(&boxes), &config.solver)?;
            let value = objective(s, reports, &sol.z)
                + (0..num_theta).filter(|th| reports[*th] > 0.0).map(|th| reports[th] * options[th][pick[th]].continuation).sum::<f64>();
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, sol));
            }
        }
        let mut i = 0;
        while i < num_theta {
            if reports[i] > 0.0 {
                pick[i] += 1;
                if pick[i] < options[i].len() {
                    break;
                }
                pick[i] = 0;
            }
            i += 1;
        }
        if i == num_theta {
            break;
        }
    }
    let (_, sol) = best.ok_or_else(|| Error::Precondition("no allocation bin combination is feasible".into()))?;
    let prices = sol.p.clone();
    let mut allocations = sol.z;
    for th in (0..num_theta).filter(|th| reports[*th] == 0.0) {
        allocations[th] = options[th]
            .iter()
            .map(|region| {
                let z: Vec<f64> = (0..num_resources)
                    .map(|n| {
                        let (lo, hi) = region.bounds[n];
                        best_response_scalar(s.utility.weight(th, n), 1.0, 0.0, prices[n], lo, hi)
                    })
                    .collect();
                let surplus = s.utility_of(th, &z) - dot(&prices, &z) + region.continuation;
                (surplus, z)
            })
            .fold(None, |acc: Option<(f64, Vec<f64>)>, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            })
            .expect("at least one bin")
            .1;
    }
    let rebate = if config.rebate {
        s.beta * dot(&prices, &s.capacities)
    } else {
        0.0
    };
    let payments: Vec<f64> = allocations.iter().map(|z| dot(&prices, z) - rebate).collect();
    let mut outcome = SlotOutcome {
        t,
        reported: reports.to_vec(),
        allocations,
        prices,
        payments,
        payoffs: Vec::new(),
    };
    outcome.payoffs = (0..num_theta)
        .map(|th| slot_payoff(d, policy, &outcome, th, th))
        .collect::<Result<_>>()?;
    Ok(outcome)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discounted value minus payment of a `truth` agent that reported `report`.
pub fn slot_payoff(d: &DynamicScenario, policy: &Policy, outcome: &SlotOutcome, truth: usize, report: usize) -> Result<f64> {
    let state = MeanFieldState {
        rho: outcome.reported.clone(),
        t: outcome.t,
    };
    Ok(value_u_sigma(d, policy, truth, &outcome.allocations[report], &state)? - outcome.payments[report])
}

/// `(2/I²) Σ_θ L_θ Σ_n C_n² / min_{θ,t} ρ_{θ,t}⁴` for identity influence.
pub fn dynamic_incentive_bound(d: &DynamicScenario, trajectory: &[Vec<f64>], num_agents: u64) -> Result<f64> {
    let min_share = trajectory.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    if !(min_share > 0.0) {
        return Err(Error::Precondition("the dynamic incentive bound needs every share positive along the trajectory".into()));
    }
    if num_agents == 0 {
        return Err(Error::validation("num_agents", "must be positive"));
    }
    let s = &d.static_scenario;
    let i = num_agents as f64;
    let capacity_sq: f64 = s.capacities.iter().map(|c| c * c).sum();
    Ok(2.0 / (i * i) * s.smoothness_sum() * capacity_sq / min_share.powi(4))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGapRow {
    pub t: usize,
    /// Mean-field distribution of the truthful trajectory at this slot.
    pub rho: Vec<f64>,
    /// Truthful outcome at the replicated population.
    pub outcome: SlotOutcome,
    /// Gain from the best misreport, floored at zero.
    pub per_type_gap: Vec<f64>,
    pub best_misreport: Vec<Option<usize>>,
    pub max_gap: f64,
    /// Smallest truthful-minus-best-lie payoff difference (not floored).
    pub margin: f64,
    /// Closed-form bound; 0 in the continuum limit.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGapTable {
    pub num_agents: AgentCount,
    pub rows: Vec<DynamicGapRow>,
}

/// Per-slot misreport gains along the truthful mean-field trajectory.
///
/// Each slot's distribution is replicated to `num_agents` by largest
/// remainder; a liar moves one head count and the slot is re-solved. In the
/// continuum limit the outcome is frozen. The distribution then advances
/// with the truthful continuum outcome.
pub fn dynamic_incentive_gap(
    d: &DynamicScenario,
    policy: &Policy,
    num_agents: AgentCount,
    config: &DynamicConfig,
) -> Result<DynamicGapTable> {
    let num_theta = d.num_theta();
    let mut state = MeanFieldState {
        rho: d.rho0.clone(),
        t: 0,
    };
    let mut trajectory = Vec::with_capacity(d.slots);
    let mut rows = Vec::with_capacity(d.slots);
    for _ in 0..d.slots {
        let mean_field = dynamic_mechanism_step(&state.rho, d, policy, &state, config)?;
        let (outcome, gains) = match num_agents {
            AgentCount::Finite(i) => {
                if i == 0 {
                    return Err(Error::validation("num_agents", "must be positive"));
                }
                let counts = largest_remainder(&state.rho, i);
                let shares = |c: &[u64]| c.iter().map(|v| *v as f64 / i as f64).collect::<Vec<f64>>();
                let honest = dynamic_mechanism_step(&shares(&counts), d, policy, &state, config)?;
                let moves: Vec<(usize, usize)> = (0..num_theta)
                    .filter(|th| counts[*th] > 0)
                    .flat_map(|th| (0..num_theta).filter(move |l| *l != th).map(move |l| (th, l)))
                    .collect();
                let gains = exec::try_map(config.solver.exec, &moves, |(th, lie)| {
                    let mut moved = counts.clone();
                    moved[*th] -= 1;
                    moved[*lie] += 1;
                    let shifted = dynamic_mechanism_step(&shares(&moved), d, policy, &state, config)?;
                    Ok::<_, Error>(((*th, *lie), slot_payoff(d, policy, &shifted, *th, *lie)? - honest.payoffs[*th]))
                })?;
                (honest, gains)
            }
            AgentCount::Infinite => {
                let mut gains = Vec::new();
                for th in 0..num_theta {
                    for lie in (0..num_theta).filter(|l| *l != th) {
                        gains.push(((th, lie), slot_payoff(d, policy, &mean_field, th, lie)? - mean_field.payoffs[th]));
                    }
                }
                (mean_field.clone(), gains)
            }
        };
        let mut per_type_gap = vec![0.0; num_theta];
        let mut best_misreport = vec![None; num_theta];
        let mut margin = f64::INFINITY;
        for ((th, lie), g) in gains {
            margin = margin.min(-g);
            if g > per_type_gap[th] {
                per_type_gap[th] = g;
                best_misreport[th] = Some(lie);
            }
        }
        let max_gap = per_type_gap.iter().cloned().fold(0.0, f64::max);
        trajectory.push(state.rho.clone());
        rows.push(DynamicGapRow {
            t: state.t,
            rho: state.rho.clone(),
            outcome,
            per_type_gap,
            best_misreport,
            max_gap,
            margin: if margin.is_finite() { margin } else { 0.0 },
            bound: 0.0,
            holds: false,
        });
        state = super::mean_field_step(&state, &mean_field.allocations, &d.kernel)?;
    }
    let bound = match num_agents {
        AgentCount::Finite(i) => Some(dynamic_incentive_bound(d, &trajectory, i)?),
        AgentCount::Infinite => None,
    };
    for row in &mut rows {
        match bound {
            Some(b) => {
                row.bound = b;
                row.holds = row.max_gap <= b * (1.0 + 1e-6);
            }
            None => row.holds = row.max_gap <= 1e-9,
        }
    }
    Ok(DynamicGapTable { num_agents, rows })
}
