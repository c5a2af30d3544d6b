use super::{mean_field_step, plan_welfare, DynamicConfig, DynamicScenario, MeanFieldState};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::solver::solve_weighted;

/// Largest number of per-slot searches the lookahead oracle will run.
pub const ORACLE_MAX_NODES: usize = 20_000;
const ORACLE_MAX_TYPES: usize = 3;
const ORACLE_MIN_GRID: usize = 50;
const ORACLE_LINE_GRID: usize = 200;
const ZOOM_ROUNDS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// Solve the static program on each slot's distribution.
    Myopic,
    /// Exhaustive open-loop search over per-slot allocation grids (small instances only).
    LookaheadOracle,
}

/// Open-loop plan: allocation per slot and type, with the resulting
/// mean-field trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub mode: PlanMode,
    /// `trajectory[k]` is the distribution at slot `k`, one more entry than `plan`.
    pub trajectory: Vec<Vec<f64>>,
    /// `plan[k][θ]` is the bundle of type `θ` in slot `k`.
    pub plan: Vec<Vec<Vec<f64>>>,
    /// Discounted welfare over the plan.
    pub welfare: f64,
}

impl Policy {
    pub fn state(&self, t: usize) -> MeanFieldState {
        MeanFieldState {
            rho: self.trajectory[t].clone(),
            t,
        }
    }
}

pub fn plan_policy(dyn_scenario: &DynamicScenario, mode: PlanMode, config: &DynamicConfig) -> Result<Policy> {
    dyn_scenario.validate()?;
    let (trajectory, plan) = match mode {
        PlanMode::Myopic => myopic(dyn_scenario, config)?,
        PlanMode::LookaheadOracle => oracle(dyn_scenario, config)?,
    };
    let mut policy = Policy {
        mode,
        trajectory,
        plan,
        welfare: 0.0,
    };
    policy.welfare = plan_welfare(dyn_scenario, &policy);
    Ok(policy)
}

type Rollout = (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>);

fn myopic(d: &DynamicScenario, config: &DynamicConfig) -> Result<Rollout> {
    let s = &d.static_scenario;
    let mut state = MeanFieldState {
        rho: d.rho0.clone(),
        t: 0,
    };
    let mut trajectory = vec![state.rho.clone()];
    let mut plan = Vec::with_capacity(d.plan_length());
    for _ in 0..d.plan_length() {
        let sol = solve_weighted(s, &state.rho, &s.capacities, &config.solver)?;
        state = mean_field_step(&state, &sol.z, &d.kernel)?;
        trajectory.push(state.rho.clone());
        plan.push(sol.z);
    }
    Ok((trajectory, plan))
}

/// Allocation intervals a type may choose from at a slot where its bin matters.
fn choices(d: &DynamicScenario, theta: usize, free: bool) -> Vec<(f64, f64)> {
    let z_max = d.static_scenario.z_max;
    if free || d.kernel.ignores_allocation(theta) {
        return vec![(0.0, z_max)];
    }
    (0..d.kernel.num_bins()).filter_map(|b| d.kernel.bin_box(b, z_max)).map(|b| b[0]).collect()
}

/// Number of per-slot searches [`plan_policy`] runs in oracle mode.
pub fn oracle_plan_size(d: &DynamicScenario) -> usize {
    let length = d.plan_length();
    let mut width = 1usize;
    let mut total = 0usize;
    for k in 0..length {
        let per_slot: usize = (0..d.num_theta()).map(|th| choices(d, th, k + 1 == length).len()).product();
        width = width.saturating_mul(per_slot);
        total = total.saturating_add(width);
    }
    total
}

fn oracle(d: &DynamicScenario, config: &DynamicConfig) -> Result<Rollout> {
    if d.num_theta() > ORACLE_MAX_TYPES || d.num_resources() != 1 {
        return Err(Error::ScaleGuard(format!(
            "lookahead oracle needs at most {ORACLE_MAX_TYPES} types and one resource"
        )));
    }
    if config.oracle_grid < ORACLE_MIN_GRID {
        return Err(Error::validation("oracle_grid", format!("must be at least {ORACLE_MIN_GRID}")));
    }
    let nodes = oracle_plan_size(d);
    if nodes > ORACLE_MAX_NODES {
        return Err(Error::ScaleGuard(format!("lookahead oracle would run {nodes} searches (max {ORACLE_MAX_NODES})")));
    }
    let root = MeanFieldState {
        rho: d.rho0.clone(),
        t: 0,
    };
    let (_, mut plan) = search(d, config, &root)?.ok_or_else(|| Error::Precondition("no feasible plan".into()))?;
    plan.reverse();
    let mut state = root;
    let mut trajectory = vec![state.rho.clone()];
    for z in &plan {
        state = mean_field_step(&state, z, &d.kernel)?;
        trajectory.push(state.rho.clone());
    }
    Ok((trajectory, plan))
}

/// Best discounted value from `state.t` to the end of the plan, with the
/// plan stored last slot first.
fn search(d: &DynamicScenario, config: &DynamicConfig, state: &MeanFieldState) -> Result<Option<(f64, Vec<Vec<Vec<f64>>>)>> {
    let last = state.t + 1 == d.plan_length();
    let options: Vec<Vec<(f64, f64)>> = (0..d.num_theta())
        .map(|th| choices(d, th, last || state.rho[th] == 0.0))
        .collect();
    let mut best: Option<(f64, Vec<Vec<Vec<f64>>>)> = None;
    let mut pick = vec![0usize; options.len()];
    loop {
        let boxes: Vec<(f64, f64)> = pick.iter().zip(&options).map(|(i, o)| o[*i]).collect();
        if let Some((now, z)) = best_in_boxes(&d.static_scenario, &state.rho, &boxes, config.oracle_grid) {
            let candidate = if last {
                Some((now, vec![z]))
            } else {
                let next = mean_field_step(state, &z, &d.kernel)?;
                search(d, config, &next)?.map(|(later, mut rest)| {
                    rest.push(z);
                    (now + d.discount * later, rest)
                })
            };
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.0 > b.0) {
                    best = Some(c);
                }
            }
        }
        // Odometer over the per-type choices.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Ok(best);
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Grid search with zoom for `max Σ ρ u(z)` subject to `Σ ρ z ≤ C` and
/// `z_θ ∈ boxes[θ]`, one resource, identity influence. All types with
/// positive share but the last are gridded; the last takes what is left.
fn best_in_boxes(s: &Scenario, rho: &[f64], boxes: &[(f64, f64)], grid: usize) -> Option<(f64, Vec<Vec<f64>>)> {
    let capacity = s.capacities[0];
    let positive: Vec<usize> = (0..rho.len()).filter(|th| rho[*th] > 0.0).collect();
    let (&filler, gridded) = positive.split_last()?;
    let levels = if gridded.len() == 1 { grid.max(ORACLE_LINE_GRID) } else { grid };

    let evaluate = |x: &[f64]| -> Option<(f64, f64)> {
        let used: f64 = gridded.iter().zip(x).map(|(th, v)| rho[*th] * v).sum();
        let (lo, hi) = boxes[filler];
        let rest = ((capacity - used) / rho[filler]).min(hi);
        if rest < lo {
            return None;
        }
        let value = gridded.iter().zip(x).map(|(th, v)| rho[*th] * s.utility_of(*th, &[*v])).sum::<f64>()
            + rho[filler] * s.utility_of(filler, &[rest]);
        Some((value, rest))
    };

    let mut ranges: Vec<(f64, f64)> = gridded.iter().map(|th| boxes[*th]).collect();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..ZOOM_ROUNDS {
        let steps: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / (levels - 1) as f64).collect();
        let mut index = vec![0usize; ranges.len()];
        let mut improved = false;
        loop {
            let x: Vec<f64> = index
                .iter()
                .zip(&ranges)
                .zip(&steps)
                .map(|((i, (lo, hi)), st)| if *i + 1 == levels { *hi } else { lo + *i as f64 * st })
                .collect();
            if let Some((v, rest)) = evaluate(&x) {
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, x, rest));
                    improved = true;
                }
            }
            let mut i = 0;
            while i < index.len() {
                index[i] += 1;
                if index[i] < levels {
                    break;
                }
                index[i] = 0;
                i += 1;
            }
            if i == index.len() {
                break;
            }
        }
        let (_, centre, _) = best.as_ref()?;
        if ranges.is_empty() || (!improved && steps.iter().all(|st| *st <= 1e-14)) {
            break;
        }
        ranges = centre
            .iter()
            .zip(&steps)
            .zip(gridded)
            .map(|((c, st), th)| ((c - st).max(boxes[*th].0), (c + st).min(boxes[*th].1)))
            .collect();
    }
    let (value, x, rest) = best?;
    let mut z = vec![vec![0.0]; rho.len()];
    for (th, v) in gridded.iter().zip(x) {
        z[*th] = vec![v];
    }
    z[filler] = vec![rest];
    for (th, zt) in z.iter_mut().enumerate() {
        if rho[th] == 0.0 {
            zt[0] = boxes[th].0;
        }
    }
    Some((value, z))
}
