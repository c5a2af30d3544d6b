use super::PrimalDualSolution;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{AgentCount, Population, Scenario};

/// Jacobian of the shadow prices with respect to the population shares.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    /// `dp_drho[n][r] = ∂p_n / ∂ρ_r`, shares treated as free coordinates.
    pub dp_drho: Vec<Vec<f64>>,
}

impl SensitivityResult {
    /// Derivative along the simplex direction that moves mass toward type
    /// `s`: `J (e_s − ρ)`.
    pub fn simplex_direction(&self, s: usize, shares: &[f64]) -> Vec<f64> {
        self.dp_drho
            .iter()
            .map(|row| row[s] - row.iter().zip(shares).map(|(j, r)| j * r).sum::<f64>())
            .collect()
    }
}

/// First-order sensitivity of the shadow prices, from differentiating the KKT system.
///
/// Differentiating stationarity `∂U/∂z = p f'(z)` of every positive-weight
/// type and the binding constraints `Σ ρ f(z) = C` gives
/// `∂p/∂ρ_s = M⁻¹ f_s(z_s)` with
/// `M = Σ_r ρ_r F'_r (−∇²U_r + diag(p f''_r))⁻¹ F'_r`.
pub fn price_sensitivity(scenario: &Scenario, rho: &Population, solution: &PrimalDualSolution) -> Result<SensitivityResult> {
    price_sensitivity_weighted(scenario, rho.shares(), solution)
}

/// [`price_sensitivity`] for arbitrary nonnegative type weights.
pub fn price_sensitivity_weighted(
    scenario: &Scenario,
    weights: &[f64],
    solution: &PrimalDualSolution,
) -> Result<SensitivityResult> {
    let num_resources = scenario.num_resources();
    let k = scenario.num_types();
    if weights.len() != k || solution.z.len() != k || solution.p.len() != num_resources {
        return Err(Error::validation("solution", "shape does not match the scenario"));
    }
    if let Some(n) = solution.p.iter().position(|p| *p <= 0.0) {
        return Err(Error::Precondition(format!(
            "sensitivity undefined at degenerate point: resource {n} is not binding"
        )));
    }
    let mut m = vec![vec![0.0; num_resources]; num_resources];
    for (r, pair) in scenario.pairs().enumerate() {
        if weights[r] <= 0.0 {
            continue;
        }
        for n in 0..num_resources {
            let z = solution.z[r][n];
            if z <= 0.0 || z >= scenario.z_max {
                return Err(Error::Precondition(format!(
                    "sensitivity undefined at degenerate point: type {r} sits at a corner of resource {n}"
                )));
            }
            let (_, b) = scenario.influence.coefficients(pair.zeta, n);
            let slope = scenario.influence.eval_derivative(pair.zeta, n, z);
            let curvature = scenario.utility.weight(pair.theta, n) / ((1.0 + z) * (1.0 + z)) + 2.0 * b * solution.p[n];
            m[n][n] += weights[r] * slope * slope / curvature;
        }
    }
    let loads: Vec<Vec<f64>> = (0..num_resources)
        .map(|n| {
            scenario
                .pairs()
                .enumerate()
                .map(|(r, pair)| scenario.influence.eval(pair.zeta, n, solution.z[r][n]))
                .collect()
        })
        .collect();
    let dp_drho = linalg::solve(&m, &loads)?;
    Ok(SensitivityResult { dp_drho })
}

/// Outcome of comparing the largest self-influence sensitivity with its
/// closed-form upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundCheck {
    /// `max_r |f_r(z_r)ᵀ ∂p/∂ρ_r|`.
    pub lhs: f64,
    /// `|Z| Σ_θ L_θ Σ_n C_n² / (I · L_f² · min_r ρ_r⁴)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Check the closed-form bound on `f_rᵀ ∂p/∂ρ_r`. `I` is the population size
/// of `rho`, which must be finite.
pub fn sensitivity_norm_bound_check(
    scenario: &Scenario,
    rho: &Population,
    solution: &PrimalDualSolution,
) -> Result<NormBoundCheck> {
    let sens = price_sensitivity(scenario, rho, solution)?;
    let agents = match rho.num_agents() {
        AgentCount::Finite(n) => n as f64,
        AgentCount::Infinite => {
            return Err(Error::Precondition("the norm bound needs a finite population".into()))
        }
    };
    let min_share = rho.min_share();
    if min_share <= 0.0 {
        return Err(Error::Precondition("the norm bound needs every share positive".into()));
    }
    let lhs = (0..scenario.num_types())
        .map(|r| {
            (0..scenario.num_resources())
                .map(|n| {
                    let zeta = scenario.type_space.pair(r).zeta;
                    scenario.influence.eval(zeta, n, solution.z[r][n]) * sens.dp_drho[n][r]
                })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0f64, f64::max);
    let capacity_sq: f64 = scenario.capacities.iter().map(|c| c * c).sum();
    let lf = scenario.influence.lower_slope();
    let rhs = scenario.type_space.num_zeta as f64 * scenario.smoothness_sum() * capacity_sq
        / (agents * lf * lf * min_share.powi(4));
    Ok(NormBoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_scenario, InfluenceParams, ScenarioShape, TypeSpace, UtilityParams};
    use crate::solver::{solve_tnum, solve_weighted, SolverConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(num_agents: AgentCount) -> Scenario {
        Scenario::new(
            TypeSpace::new(1, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::new(vec![1.0], num_agents).unwrap(),
            vec![1.0],
            1.0,
            10.0,
        )
        .unwrap()
    }

    fn max_abs(m: &[Vec<f64>]) -> f64 {
        m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Central differences along simplex directions, renormalizing each side.
    fn simplex_fd(s: &Scenario, h: f64) -> Vec<Vec<f64>> {
        let cfg = SolverConfig::default();
        let rho = s.population.shares();
        let k = rho.len();
        let mut cols = vec![vec![0.0; k]; s.num_resources()];
        for t in 0..k {
            let shift = |sign: f64| -> Vec<f64> {
                let mut w = rho.to_vec();
                w[t] += sign * h;
                let total: f64 = w.iter().sum();
                w.iter().map(|v| v / total).collect()
            };
            let up = solve_weighted(s, &shift(1.0), &s.capacities, &cfg).unwrap();
            let down = solve_weighted(s, &shift(-1.0), &s.capacities, &cfg).unwrap();
            for n in 0..s.num_resources() {
                cols[n][t] = (up.p[n] - down.p[n]) / (2.0 * h);
            }
        }
        cols
    }

    #[test]
    fn one_type_quarter() {
        let s = unit(AgentCount::Finite(1));
        let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
        let sens = price_sensitivity(&s, &s.population, &sol).unwrap();
        assert!((sens.dp_drho[0][0] - 0.25).abs() < 1e-8);
        // free-coordinate oracle: perturb the single weight
        let cfg = SolverConfig::default();
        let h = 1e-5;
        let up = solve_weighted(&s, &[1.0 + h], &[1.0], &cfg).unwrap().p[0];
        let down = solve_weighted(&s, &[1.0 - h], &[1.0], &cfg).unwrap().p[0];
        assert!(((up - down) / (2.0 * h) - 0.25).abs() < 1e-4 * 0.25);
    }

    #[test]
    fn one_type_bound() {
        let s = unit(AgentCount::Finite(1));
        let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
        let check = sensitivity_norm_bound_check(&s, &s.population, &sol).unwrap();
        assert!((check.lhs - 0.25).abs() < 1e-8);
        assert_eq!(check.rhs, 1.0);
        assert!(check.holds);
    }

    #[test]
    fn common_rescaling_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_scenario(&mut rng, &ScenarioShape::new(2, 1, 2).quadratic_max(0.1));
        let cfg = SolverConfig::default();
        let scale = 3.0;
        let w: Vec<f64> = s.population.shares().iter().map(|v| v * scale).collect();
        let c: Vec<f64> = s.capacities.iter().map(|v| v * scale).collect();
        let sol = solve_weighted(&s, &w, &c, &cfg).unwrap();
        let sens = price_sensitivity_weighted(&s, &w, &sol).unwrap();
        let h = 1e-5;
        let mut fd = vec![vec![0.0; w.len()]; 2];
        for t in 0..w.len() {
            let mut up = w.clone();
            up[t] += h;
            let mut down = w.clone();
            down[t] -= h;
            let pu = solve_weighted(&s, &up, &c, &cfg).unwrap().p;
            let pd = solve_weighted(&s, &down, &c, &cfg).unwrap().p;
            for n in 0..2 {
                fd[n][t] = (pu[n] - pd[n]) / (2.0 * h);
            }
        }
        let err = max_abs(&fd.iter().zip(&sens.dp_drho).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect::<Vec<_>>());
        assert!(err <= 1e-4 * max_abs(&fd), "{err}");
    }

    #[test]
    fn random_instances_match_simplex_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        while checked < 5 {
            let s = random_scenario(&mut rng, &ScenarioShape::new(2, 2, 2).quadratic_max(0.1));
            let sol = solve_tnum(&s, &s.population, &SolverConfig::default()).unwrap();
            let Ok(sens) = price_sensitivity(&s, &s.population, &sol) else { continue };
            let fd = simplex_fd(&s, 1e-5);
            let k = s.num_types();
            let analytic: Vec<Vec<f64>> = {
                let cols: Vec<Vec<f64>> = (0..k).map(|t| sens.simplex_direction(t, s.population.shares())).collect();
                (0..2).map(|n| (0..k).map(|t| cols[t][n]).collect()).collect()
            };
            let diff: Vec<Vec<f64>> = fd.iter().zip(&analytic).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
            assert!(max_abs(&diff) <= 1e-4 * max_abs(&fd));
            checked += 1;
        }
    }

    #[test]
    fn slack_point_is_rejected() {
        let s = unit(AgentCount::Finite(1));
        let sol = solve_weighted(&s, &[1.0], &[20.0], &SolverConfig::default()).unwrap();
        assert_eq!(sol.p, vec![0.0]);
        assert!(matches!(price_sensitivity(&s, &s.population, &sol), Err(Error::Precondition(_))));
        assert!(matches!(sensitivity_norm_bound_check(&s, &s.population, &sol), Err(Error::Precondition(_))));
    }
}
