use super::{InfluenceParams, Population, TypePair, TypeSpace, UtilityParams};
use crate::error::{Error, Result};

/// A complete static problem instance.
///
/// `capacities` are per-capita: a population of `I` agents shares a total of
/// `I · C_n` units of constraint `n`, so the type-level program uses `C_n`
/// directly and finite-population programs scale it by `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub type_space: TypeSpace,
    pub utility: UtilityParams,
    pub influence: InfluenceParams,
    pub population: Population,
    pub capacities: Vec<f64>,
    pub beta: f64,
    pub z_max: f64,
}

impl Scenario {
    pub fn new(
        type_space: TypeSpace,
        utility: UtilityParams,
        influence: InfluenceParams,
        population: Population,
        capacities: Vec<f64>,
        beta: f64,
        z_max: f64,
    ) -> Result<Self> {
        let s = Scenario {
            type_space,
            utility,
            influence,
            population,
            capacities,
            beta,
            z_max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ts = &self.type_space;
        ts.validate()?;
        self.utility.validate()?;
        self.influence.validate()?;
        if self.utility.num_theta() != ts.num_theta || self.utility.weights[0].len() != ts.num_resources {
            return Err(Error::validation("utility.weights", "shape must be |T| x N"));
        }
        if self.influence.num_zeta() != ts.num_zeta || self.influence.linear[0].len() != ts.num_resources {
            return Err(Error::validation("influence.linear", "shape must be |Z| x N"));
        }
        if self.population.num_types() != ts.num_types() {
            return Err(Error::validation("population.shares", "length must be |T|·|Z|"));
        }
        if self.population.shares().iter().any(|s| *s <= 0.0) {
            return Err(Error::validation(
                "population.shares",
                "every type needs a positive share",
            ));
        }
        if self.capacities.len() != ts.num_resources {
            return Err(Error::validation("capacities", "length must be N"));
        }
        if let Some(c) = self.capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::validation("capacities", format!("capacity {c} must be positive")));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::validation("beta", format!("{} outside [0, 1]", self.beta)));
        }
        if !(self.z_max.is_finite() && self.z_max > 0.0) {
            return Err(Error::validation("z_max", "must be positive and finite"));
        }
        for n in 0..ts.num_resources {
            let load: f64 = ts
                .pairs()
                .enumerate()
                .map(|(r, pair)| self.population.share(r) * self.influence.eval(pair.zeta, n, self.z_max))
                .sum();
            if load < self.capacities[n] {
                return Err(Error::validation(
                    "z_max",
                    format!(
                        "load {load} at the cap is below capacity {} of resource {n}",
                        self.capacities[n]
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn num_types(&self) -> usize {
        self.type_space.num_types()
    }

    pub fn num_resources(&self) -> usize {
        self.type_space.num_resources
    }

    /// Total capacity shared by `agents` agents.
    pub fn total_capacities(&self, agents: u64) -> Vec<f64> {
        self.capacities.iter().map(|c| c * agents as f64).collect()
    }

    /// Utility of true preference `theta` at allocation `x` (unchecked).
    pub(crate) fn utility_of(&self, theta: usize, x: &[f64]) -> f64 {
        self.utility.eval(theta, x)
    }

    /// The same scenario with a different population.
    pub fn with_population(&self, population: Population) -> Result<Self> {
        let mut s = self.clone();
        s.population = population;
        s.validate()?;
        Ok(s)
    }

    /// Joint types in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = TypePair> + '_ {
        self.type_space.pairs()
    }

    /// Sum over `θ` of the smoothness constants `L_θ`.
    pub fn smoothness_sum(&self) -> f64 {
        (0..self.type_space.num_theta).map(|t| self.utility.smoothness(t)).sum()
    }
}
