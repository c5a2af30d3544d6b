use super::tnum::Boxes;
use super::PrimalDualSolution;
use crate::model::{Population, Scenario};

/// Stationarity + complementary slackness + infeasibility of a solution to
/// the type-level program on `rho` with the scenario's capacities.
pub fn kkt_residual(solution: &PrimalDualSolution, scenario: &Scenario, rho: &Population) -> f64 {
    kkt_residual_weighted(solution, scenario, rho.shares(), &scenario.capacities, None)
}

/// [`kkt_residual`] for explicit weights, capacities and allocation boxes.
///
/// Stationarity is measured per coordinate; at a box corner only the sign
/// that would improve the objective by leaving the box counts. Slack is
/// recomputed from `z`, not read from the solution.
pub fn kkt_residual_weighted(
    solution: &PrimalDualSolution,
    scenario: &Scenario,
    weights: &[f64],
    capacities: &[f64],
    boxes: Option<&Boxes>,
) -> f64 {
    let num_resources = scenario.num_resources();
    let mut stationarity = 0.0f64;
    for (r, pair) in scenario.pairs().enumerate() {
        for n in 0..num_resources {
            let z = solution.z[r][n];
            let (lo, hi) = match boxes {
                Some(b) => b[r][n],
                None => (0.0, scenario.z_max),
            };
            let p = solution.p[n];
            let g = scenario.utility.weight(pair.theta, n) / (1.0 + z)
                - p * scenario.influence.eval_derivative(pair.zeta, n, z);
            let violation = if z < lo || z > hi {
                f64::INFINITY
            } else if z == lo && z == hi {
                0.0
            } else if z == lo {
                g.max(0.0)
            } else if z == hi {
                (-g).max(0.0)
            } else {
                g.abs()
            };
            stationarity = stationarity.max(violation);
        }
    }
    let mut slackness = 0.0f64;
    let mut infeasibility = 0.0f64;
    for n in 0..num_resources {
        let load: f64 = scenario
            .pairs()
            .enumerate()
            .filter(|(r, _)| weights[*r] > 0.0)
            .map(|(r, pair)| weights[r] * scenario.influence.eval(pair.zeta, n, solution.z[r][n]))
            .sum();
        let slack = capacities[n] - load;
        let p = solution.p[n];
        slackness = slackness.max(p.max(0.0) * slack.abs());
        infeasibility = infeasibility.max((-slack).max(0.0)).max((-p).max(0.0));
    }
    stationarity + slackness + infeasibility
}
