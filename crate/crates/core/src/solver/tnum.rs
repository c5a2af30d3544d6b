use super::best_response::best_response_scalar;
use super::kkt::kkt_residual_weighted;
use super::{PrimalDualSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{empirical_population, Population, Scenario, TypePair};

/// Per-type, per-resource allocation box `[lo, hi]`.
pub type Boxes = [Vec<(f64, f64)>];

fn bounds(scenario: &Scenario, boxes: Option<&Boxes>, r: usize, n: usize) -> (f64, f64) {
    match boxes {
        Some(b) => b[r][n],
        None => (0.0, scenario.z_max),
    }
}

fn type_response(scenario: &Scenario, boxes: Option<&Boxes>, r: usize, pair: TypePair, n: usize, p: f64) -> f64 {
    let (a, b) = scenario.influence.coefficients(pair.zeta, n);
    let (lo, hi) = bounds(scenario, boxes, r, n);
    best_response_scalar(scenario.utility.weight(pair.theta, n), a, b, p, lo, hi)
}

/// Weighted load `Σ_r weight_r f_{r,n}(z_{r,n}(p))` of resource `n` at price `p`.
pub fn aggregate_demand(scenario: &Scenario, weights: &[f64], n: usize, p: f64) -> f64 {
    demand(scenario, weights, None, n, p)
}

fn demand(scenario: &Scenario, weights: &[f64], boxes: Option<&Boxes>, n: usize, p: f64) -> f64 {
    scenario
        .pairs()
        .enumerate()
        .filter(|(r, _)| weights[*r] > 0.0)
        .map(|(r, pair)| weights[r] * scenario.influence.eval(pair.zeta, n, type_response(scenario, boxes, r, pair, n, p)))
        .sum()
}

struct PriceSearch {
    price: f64,
    iterations: usize,
}

fn search_price(
    scenario: &Scenario,
    weights: &[f64],
    capacity: f64,
    boxes: Option<&Boxes>,
    n: usize,
    config: &SolverConfig,
) -> Result<PriceSearch> {
    let load = |p: f64| demand(scenario, weights, boxes, n, p);
    if load(0.0) <= capacity {
        return Ok(PriceSearch { price: 0.0, iterations: 0 });
    }
    // Above this price every positive-weight type sits at its lower bound.
    let mut upper = 0.0f64;
    for (r, pair) in scenario.pairs().enumerate() {
        if weights[r] > 0.0 {
            let (a, b) = scenario.influence.coefficients(pair.zeta, n);
            let (lo, _) = bounds(scenario, boxes, r, n);
            let w = scenario.utility.weight(pair.theta, n);
            upper = upper.max(w / ((1.0 + lo) * (a + 2.0 * b * lo)));
        }
    }
    let floor_load = load(upper);
    if floor_load > capacity * (1.0 + config.price_tolerance) {
        return Err(Error::Solver {
            message: format!("resource {n}: load {floor_load} at the lower allocation bounds exceeds capacity {capacity}"),
            residual: floor_load - capacity,
        });
    }
    let (mut lo, mut hi) = (0.0f64, upper);
    let mut iterations = 0;
    while iterations < config.max_bisection_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let d = load(mid);
        if d > capacity {
            lo = mid;
        } else if d < capacity {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
            break;
        }
    }
    let (d_lo, d_hi) = (load(lo), load(hi));
    let price = if (d_lo - capacity).abs() < (d_hi - capacity).abs() { lo } else { hi };
    let excess = (load(price) - capacity).abs();
    if excess > config.price_tolerance * capacity {
        return Err(Error::Solver {
            message: format!("resource {n}: bisection stopped after {iterations} steps"),
            residual: excess / capacity,
        });
    }
    Ok(PriceSearch { price, iterations })
}

/// Maximize `Σ_r weight_r U(θ_r, z_r)` subject to
/// `Σ_r weight_r f_{ζ_r,n}(z_{r,n}) ≤ capacities[n]` and `z_r` in its box.
///
/// Weights may be head counts or shares and may be zero; zero-weight types
/// receive their best response to the resulting prices. Without boxes every
/// coordinate lies in `[0, z_max]`.
pub fn solve_boxed(
    scenario: &Scenario,
    weights: &[f64],
    capacities: &[f64],
    boxes: Option<&Boxes>,
    config: &SolverConfig,
) -> Result<PrimalDualSolution> {
    let k = scenario.num_types();
    let num_resources = scenario.num_resources();
    if weights.len() != k || capacities.len() != num_resources {
        return Err(Error::validation("weights", "shape does not match the scenario"));
    }
    if let Some(b) = boxes {
        if b.len() != k || b.iter().any(|row| row.len() != num_resources || row.iter().any(|(lo, hi)| !(0.0 <= *lo && lo <= hi))) {
            return Err(Error::validation("boxes", "need 0 ≤ lo ≤ hi for every type and resource"));
        }
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::validation("weights", "must be nonnegative"));
    }
    let mut p = Vec::with_capacity(num_resources);
    let mut iterations = 0;
    for n in 0..num_resources {
        let found = search_price(scenario, weights, capacities[n], boxes, n, config)?;
        p.push(found.price);
        iterations += found.iterations;
    }
    let z: Vec<Vec<f64>> = scenario
        .pairs()
        .enumerate()
        .map(|(r, pair)| (0..num_resources).map(|n| type_response(scenario, boxes, r, pair, n, p[n])).collect())
        .collect();
    let constraint_slack = (0..num_resources)
        .map(|n| {
            let load: f64 = scenario
                .pairs()
                .enumerate()
                .filter(|(r, _)| weights[*r] > 0.0)
                .map(|(r, pair)| weights[r] * scenario.influence.eval(pair.zeta, n, z[r][n]))
                .sum();
            capacities[n] - load
        })
        .collect();
    let mut solution = PrimalDualSolution {
        z,
        p,
        kkt_residual: 0.0,
        constraint_slack,
        iterations,
    };
    solution.kkt_residual = kkt_residual_weighted(&solution, scenario, weights, capacities, boxes);
    Ok(solution)
}

/// [`solve_boxed`] over the default box `[0, z_max]^N`.
pub fn solve_weighted(
    scenario: &Scenario,
    weights: &[f64],
    capacities: &[f64],
    config: &SolverConfig,
) -> Result<PrimalDualSolution> {
    solve_boxed(scenario, weights, capacities, None, config)
}

/// Type-level program on the population `rho` with per-capita capacities.
pub fn solve_tnum(scenario: &Scenario, rho: &Population, config: &SolverConfig) -> Result<PrimalDualSolution> {
    if rho.num_types() != scenario.num_types() {
        return Err(Error::validation("population.shares", "length must be |T|·|Z|"));
    }
    solve_weighted(scenario, rho.shares(), &scenario.capacities, config)
}

/// Solution of the agent-level program for an explicit agent list.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSolution {
    pub population: Population,
    /// Type-level solution on the empirical distribution.
    pub solution: PrimalDualSolution,
    /// Allocation of each agent, in input order.
    pub allocations: Vec<Vec<f64>>,
}

/// Agent-level program: `I` agents share `I · C_n` of each resource.
///
/// Agents of equal type receive equal allocations, so this is the type-level
/// program on the empirical distribution; prices are per unit of capacity and
/// coincide with the type-level prices.
pub fn solve_num_finite(assignments: &[TypePair], scenario: &Scenario, config: &SolverConfig) -> Result<FiniteSolution> {
    let population = empirical_population(&scenario.type_space, assignments)?;
    let solution = solve_weighted(scenario, population.shares(), &scenario.capacities, config)?;
    let allocations = assignments
        .iter()
        .map(|pair| solution.z[scenario.type_space.index(*pair)].clone())
        .collect();
    Ok(FiniteSolution {
        population,
        solution,
        allocations,
    })
}

/// `Σ_r weight_r U(θ_r, z_r)`.
pub fn objective(scenario: &Scenario, weights: &[f64], z: &[Vec<f64>]) -> f64 {
    scenario
        .pairs()
        .enumerate()
        .filter(|(r, _)| weights[*r] > 0.0)
        .map(|(r, pair)| weights[r] * scenario.utility_of(pair.theta, &z[r]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_scenario, AgentCount, InfluenceParams, ScenarioShape, TypeSpace, UtilityParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(capacity: f64) -> Scenario {
        Scenario::new(
            TypeSpace::new(1, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::mean_field(vec![1.0]).unwrap(),
            vec![capacity],
            1.0,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn one_type_hand_solution() {
        let s = unit(1.0);
        let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
        assert!((sol.z[0][0] - 1.0).abs() < 1e-9);
        assert!((sol.p[0] - 0.5).abs() < 1e-9);
        assert!(sol.kkt_residual <= 1e-8);
    }

    #[test]
    fn slack_constraint_has_zero_price() {
        let s = unit(10.0);
        let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
        assert_eq!(sol.p, vec![0.0]);
        assert_eq!(sol.z[0][0], s.z_max);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn identical_types_identical_rows() {
        let s = Scenario::new(
            TypeSpace::new(2, 1, 2).unwrap(),
            UtilityParams::new(vec![vec![1.3, 0.7], vec![1.3, 0.7]]).unwrap(),
            InfluenceParams::new(vec![vec![0.9, 1.1]], vec![vec![0.1, 0.0]]).unwrap(),
            Population::mean_field(vec![0.5, 0.5]).unwrap(),
            vec![1.0, 0.8],
            1.0,
            50.0,
        )
        .unwrap();
        let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
        assert_eq!(sol.z[0], sol.z[1]);
    }

    #[test]
    fn finite_single_agent() {
        let s = unit(1.0);
        let fin = solve_num_finite(&[TypePair::new(0, 0)], &s, &SolverConfig::default()).unwrap();
        assert!((fin.allocations[0][0] - 1.0).abs() < 1e-9);
        assert!((fin.solution.p[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn finite_two_identical_agents_share_total() {
        // per-capita capacity 1, so two agents share 2 units
        let s = unit(1.0);
        let a = TypePair::new(0, 0);
        let fin = solve_num_finite(&[a, a], &s, &SolverConfig::default()).unwrap();
        for x in &fin.allocations {
            assert!((x[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_scenario(&mut rng, &ScenarioShape::new(2, 2, 2).agents(AgentCount::Finite(12)));
        let agents = s.population.assignments(&s.type_space).unwrap();
        let fin = solve_num_finite(&agents, &s, &SolverConfig::default()).unwrap();
        let w = fin.population.shares();
        let best = objective(&s, w, &fin.solution.z);
        let k = s.num_types();
        for _ in 0..10_000 {
            // sample a point, then shrink it into the feasible set
            let mut z: Vec<Vec<f64>> = (0..k).map(|_| (0..2).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
            for n in 0..2 {
                let load: f64 = s.pairs().enumerate().map(|(r, pr)| w[r] * s.influence.eval(pr.zeta, n, z[r][n])).sum();
                if load > s.capacities[n] {
                    // f is convex with f(0) = 0, so scaling by c/load keeps load ≤ c
                    let shrink = s.capacities[n] / load;
                    for row in z.iter_mut() {
                        row[n] *= shrink;
                    }
                }
            }
            assert!(objective(&s, w, &z) <= best + 1e-12);
        }
    }

    #[test]
    fn zero_weight_types_follow_prices() {
        let s = Scenario::new(
            TypeSpace::new(2, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0], vec![2.0]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::mean_field(vec![0.5, 0.5]).unwrap(),
            vec![1.0],
            1.0,
            10.0,
        )
        .unwrap();
        let sol = solve_weighted(&s, &[1.0, 0.0], &[1.0], &SolverConfig::default()).unwrap();
        assert!((sol.p[0] - 0.5).abs() < 1e-9);
        assert!((sol.z[1][0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn boxes_raise_floor_and_cap() {
        let s = unit(1.0);
        let cfg = SolverConfig::default();
        let capped = solve_boxed(&s, &[1.0], &[1.0], Some(&[vec![(0.0, 0.5)]]), &cfg).unwrap();
        assert_eq!(capped.p, vec![0.0]);
        assert_eq!(capped.z[0][0], 0.5);
        let floored = solve_boxed(&s, &[1.0], &[1.0], Some(&[vec![(0.5, 5.0)]]), &cfg).unwrap();
        assert!((floored.p[0] - 0.5).abs() < 1e-9);
        assert!(solve_boxed(&s, &[1.0], &[1.0], Some(&[vec![(2.0, 3.0)]]), &cfg).is_err());
    }

    #[test]
    fn iteration_cap_reports_solver_error() {
        let s = unit(0.8);
        let cfg = SolverConfig {
            max_bisection_iters: 3,
            ..SolverConfig::default()
        };
        assert!(matches!(solve_tnum(&s, &s.population, &cfg), Err(Error::Solver { .. })));
    }
}
