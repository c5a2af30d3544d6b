//! Static system model: agent types, utility and influence families,
//! populations, and complete problem instances.

mod generate;
mod influence;
pub(crate) mod io;
mod population;
mod scenario;
mod utility;

pub use generate::{random_scenario, ScenarioShape};
pub use influence::InfluenceParams;
pub use io::{load_scenario, save_scenario, Real, ScenarioDoc};
pub use population::{empirical_population, AgentCount, Population};
pub use scenario::Scenario;
pub use utility::UtilityParams;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizes of the finite type sets and the number of resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSpace {
    pub num_theta: usize,
    pub num_zeta: usize,
    pub num_resources: usize,
}

impl TypeSpace {
    pub fn new(num_theta: usize, num_zeta: usize, num_resources: usize) -> Result<Self> {
        let ts = TypeSpace {
            num_theta,
            num_zeta,
            num_resources,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("type_space.num_theta", self.num_theta),
            ("type_space.num_zeta", self.num_zeta),
            ("type_space.num_resources", self.num_resources),
        ] {
            if v == 0 {
                return Err(Error::validation(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Number of joint `(θ, ζ)` types.
    pub fn num_types(&self) -> usize {
        self.num_theta * self.num_zeta
    }

    /// Row-major index of a joint type.
    pub fn index(&self, pair: TypePair) -> usize {
        pair.theta * self.num_zeta + pair.zeta
    }

    pub fn pair(&self, index: usize) -> TypePair {
        TypePair {
            theta: index / self.num_zeta,
            zeta: index % self.num_zeta,
        }
    }

    /// All joint types in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = TypePair> + '_ {
        (0..self.num_types()).map(|i| self.pair(i))
    }

    pub fn contains(&self, pair: TypePair) -> bool {
        pair.theta < self.num_theta && pair.zeta < self.num_zeta
    }

    pub(crate) fn check(&self, pair: TypePair) -> Result<()> {
        if self.contains(pair) {
            Ok(())
        } else {
            Err(Error::validation(
                "type",
                format!(
                    "({}, {}) outside {}x{} type space",
                    pair.theta, pair.zeta, self.num_theta, self.num_zeta
                ),
            ))
        }
    }
}

/// A joint agent type `(θ, ζ)`: preference index and network-configuration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypePair {
    pub theta: usize,
    pub zeta: usize,
}

impl TypePair {
    pub const fn new(theta: usize, zeta: usize) -> Self {
        TypePair { theta, zeta }
    }
}

/// An agent's message: the type it claims to have.
pub type Report = TypePair;
