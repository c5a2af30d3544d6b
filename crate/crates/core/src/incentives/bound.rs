use super::incentive_gap;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{AgentCount, Population, Scenario};
use crate::solver::SolverConfig;

/// `(2/I²) |Z| Σ_θ L_θ Σ_n C_n² / (L_f² min_r ρ_r⁴)`.
pub fn incentive_bound(scenario: &Scenario, rho: &Population, num_agents: u64) -> Result<f64> {
    let min_share = rho.min_share();
    if min_share <= 0.0 {
        return Err(Error::Precondition("the incentive bound needs every share positive".into()));
    }
    if num_agents == 0 {
        return Err(Error::validation("num_agents", "must be positive"));
    }
    let i = num_agents as f64;
    let capacity_sq: f64 = scenario.capacities.iter().map(|c| c * c).sum();
    let lf = scenario.influence.lower_slope();
    Ok(2.0 / (i * i) * scenario.type_space.num_zeta as f64 * scenario.smoothness_sum() * capacity_sq
        / (lf * lf * min_share.powi(4)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonIcRow {
    pub num_agents: u64,
    pub max_gap: f64,
    pub bound: f64,
    pub holds: bool,
    pub per_type_gap: Vec<f64>,
    pub best_misreport: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonIcTable {
    pub rows: Vec<EpsilonIcRow>,
    /// Least-squares slope of `ln max_gap` on `ln I` over rows with a
    /// positive gap; `None` with fewer than two such rows.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x` over points with `y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Measured gaps against the bound for each population size in `sizes`.
pub fn verify_epsilon_ic(scenario: &Scenario, rho: &Population, sizes: &[u64], config: &SolverConfig) -> Result<EpsilonIcTable> {
    let rows = exec::try_map(config.exec, sizes, |i| {
        let report = incentive_gap(scenario, rho, AgentCount::Finite(*i), config)?;
        Ok::<_, Error>(EpsilonIcRow {
            num_agents: *i,
            max_gap: report.max_gap,
            bound: report.epsilon_bound,
            holds: report.max_gap <= report.epsilon_bound * (1.0 + 1e-6),
            per_type_gap: report.per_type_gap,
            best_misreport: report.best_misreport,
        })
    })?;
    let slope = log_log_slope(&rows.iter().map(|r| (r.num_agents as f64, r.max_gap)).collect::<Vec<_>>());
    Ok(EpsilonIcTable { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InfluenceParams, TypeSpace, UtilityParams};

    fn scenario(shares: Vec<f64>) -> Scenario {
        Scenario::new(
            TypeSpace::new(2, 1, 1).unwrap(),
            UtilityParams::new(vec![vec![1.0], vec![0.5]]).unwrap(),
            InfluenceParams::identity(1, 1),
            Population::mean_field(shares).unwrap(),
            vec![1.0],
            1.0,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn reference_value() {
        // |Z| = 1, Σ L = 1.5 here, so scale the reference 3.2e-3 by 1.5
        let s = scenario(vec![0.5, 0.5]);
        let b = incentive_bound(&s, &s.population, 100).unwrap();
        assert!((b - 1.5 * 3.2e-3).abs() < 1e-15);
    }

    #[test]
    fn unit_reference_value() {
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
        let half = Population::mean_field(vec![0.5, 0.5]).unwrap();
        assert!((incentive_bound(&s, &half, 100).unwrap() - 3.2e-3).abs() < 1e-15);
    }

    #[test]
    fn scaling_in_size_and_share() {
        let s = scenario(vec![0.5, 0.5]);
        let b1 = incentive_bound(&s, &s.population, 100).unwrap();
        let b2 = incentive_bound(&s, &s.population, 200).unwrap();
        assert_eq!(b1 / 4.0, b2);
        let skewed = Population::mean_field(vec![0.25, 0.75]).unwrap();
        let b3 = incentive_bound(&s, &skewed, 100).unwrap();
        assert!((b3 / b1 - 16.0).abs() < 1e-12);
    }

    #[test]
    fn empty_type_is_rejected() {
        let s = scenario(vec![0.5, 0.5]);
        let empty = Population::mean_field(vec![1.0, 0.0]).unwrap();
        assert!(incentive_bound(&s, &empty, 10).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|i: &f64| (*i, 3.0 / (i * i))).collect();
        assert!((log_log_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&[(10.0, 1.0), (20.0, 0.0)]), None);
    }

    #[test]
    fn bound_column_is_formula() {
        let s = scenario(vec![0.5, 0.5]);
        let table = verify_epsilon_ic(&s, &s.population, &[10, 20], &SolverConfig::default()).unwrap();
        for row in &table.rows {
            assert_eq!(row.bound, incentive_bound(&s, &s.population, row.num_agents).unwrap());
        }
    }
}
