use super::large_scale::assemble;
use super::Outcome;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{Report, Scenario, TypePair};
use crate::solver::{objective, solve_num_finite, solve_weighted, SolverConfig};

/// Largest population the exact oracle accepts.
pub const EXACT_VCG_MAX_AGENTS: usize = 200;

fn guard(num_agents: usize) -> Result<()> {
    if num_agents == 0 {
        return Err(Error::validation("reports", "empty agent list"));
    }
    if num_agents > EXACT_VCG_MAX_AGENTS {
        return Err(Error::ScaleGuard(format!(
            "exact VCG needs one solve per excluded agent; {num_agents} agents exceed the limit of \
             {EXACT_VCG_MAX_AGENTS}, use the large-scale mechanism instead"
        )));
    }
    Ok(())
}

/// Exact VCG on the finite program where `I` agents share `I · C_n`.
///
/// Agent `i` pays the welfare the others would reach without it (still with
/// the full capacity `I · C_n`) minus the welfare the others get at the
/// chosen allocation, both measured at reported types. Agents with equal
/// reports share one exclusion solve.
pub fn vcg_exact(reports: &[Report], true_types: &[TypePair], scenario: &Scenario, config: &SolverConfig) -> Result<Outcome> {
    guard(reports.len())?;
    if reports.len() != true_types.len() {
        return Err(Error::validation("reports", "one report per agent is required"));
    }
    let space = &scenario.type_space;
    let agents = reports.len() as u64;
    let total = scenario.total_capacities(agents);
    let mut counts = vec![0.0; scenario.num_types()];
    for r in reports {
        space.check(*r)?;
        counts[space.index(*r)] += 1.0;
    }
    let full = solve_weighted(scenario, &counts, &total, config)?;
    let welfare = objective(scenario, &counts, &full.z);

    let present: Vec<usize> = (0..counts.len()).filter(|r| counts[*r] > 0.0).collect();
    let excluded = exec::try_map(config.exec, &present, |r| {
        let mut rest = counts.clone();
        rest[*r] -= 1.0;
        let sol = solve_weighted(scenario, &rest, &total, config)?;
        Ok::<f64, Error>(objective(scenario, &rest, &sol.z))
    })?;
    let mut without = vec![0.0; counts.len()];
    for (r, w) in present.iter().zip(excluded) {
        without[*r] = w;
    }

    let allocations: Vec<Vec<f64>> = reports.iter().map(|r| full.z[space.index(*r)].clone()).collect();
    let payments = reports
        .iter()
        .zip(&allocations)
        .map(|(r, x)| {
            if agents == 1 {
                return 0.0;
            }
            let others = welfare - scenario.utility_of(r.theta, x);
            without[space.index(*r)] - others
        })
        .collect();
    Ok(assemble(
        scenario,
        true_types,
        reports,
        allocations,
        payments,
        full.p,
        vec![1.0; reports.len()],
        scenario.beta,
    ))
}

/// Per-agent `|h_i^VCG − Σ_n λ_n f_{ζ_i,n}(x_{i,n})|` for truthful reports,
/// with `(x, λ)` the solution of the finite program.
pub fn shadow_payment_gap(assignments: &[TypePair], scenario: &Scenario, config: &SolverConfig) -> Result<Vec<f64>> {
    guard(assignments.len())?;
    let exact = vcg_exact(assignments, assignments, scenario, config)?;
    let finite = solve_num_finite(assignments, scenario, config)?;
    Ok(assignments
        .iter()
        .zip(&finite.allocations)
        .zip(&exact.payments)
        .map(|((t, x), h)| {
            let limit: f64 = (0..scenario.num_resources())
                .map(|n| finite.solution.p[n] * scenario.influence.eval(t.zeta, n, x[n]))
                .sum();
            (h - limit).abs()
        })
        .collect())
}
