use std::fmt;

use serde::{Deserialize, Serialize};

use super::{TypePair, TypeSpace};
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;
const INTEGRALITY_TOLERANCE: f64 = 1e-9;

/// Number of agents: a finite count or the mean-field limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentCount {
    Finite(u64),
    Infinite,
}

impl AgentCount {
    pub fn finite(self) -> Option<u64> {
        match self {
            AgentCount::Finite(n) => Some(n),
            AgentCount::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, AgentCount::Infinite)
    }
}

impl fmt::Display for AgentCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentCount::Finite(n) => write!(f, "{n}"),
            AgentCount::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for AgentCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AgentCount::Finite(n) => s.serialize_u64(*n),
            AgentCount::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for AgentCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(AgentCount::Finite(n)),
            Raw::Str(s) if s == "infinite" => Ok(AgentCount::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "num_agents must be an integer or \"infinite\", got {s:?}"
            ))),
        }
    }
}

/// Type distribution `ρ_{θ,ζ}` (row-major over `(θ, ζ)`) and population size.
///
/// Shares are nonnegative and sum to one. A finite population additionally
/// requires every `share · I` to be an integer. Strict positivity is a
/// property of scenarios (see [`super::Scenario`]); report distributions may
/// leave some types empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    shares: Vec<f64>,
    num_agents: AgentCount,
}

impl Population {
    pub fn new(shares: Vec<f64>, num_agents: AgentCount) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::validation("population.shares", "empty"));
        }
        if let Some(s) = shares.iter().find(|s| !(s.is_finite() && **s >= 0.0 && **s <= 1.0)) {
            return Err(Error::validation("population.shares", format!("share {s} outside [0, 1]")));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation(
                "population.shares",
                format!("shares sum to {total}, expected 1"),
            ));
        }
        match num_agents {
            AgentCount::Finite(0) => {
                return Err(Error::validation("population.num_agents", "must be positive"))
            }
            AgentCount::Finite(n) => {
                for (r, s) in shares.iter().enumerate() {
                    let c = s * n as f64;
                    if (c - c.round()).abs() > INTEGRALITY_TOLERANCE {
                        return Err(Error::validation(
                            "population.shares",
                            format!("share {s} of type {r} times I = {n} is not an integer"),
                        ));
                    }
                }
            }
            AgentCount::Infinite => {}
        }
        Ok(Population { shares, num_agents })
    }

    /// Mean-field population with the given shares.
    pub fn mean_field(shares: Vec<f64>) -> Result<Self> {
        Population::new(shares, AgentCount::Infinite)
    }

    /// Finite population from per-type head counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::validation("population", "no agents"));
        }
        let shares = counts.iter().map(|c| *c as f64 / total as f64).collect();
        Population::new(shares, AgentCount::Finite(total))
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn share(&self, r: usize) -> f64 {
        self.shares[r]
    }

    pub fn num_agents(&self) -> AgentCount {
        self.num_agents
    }

    pub fn num_types(&self) -> usize {
        self.shares.len()
    }

    /// Head counts `share · I`, for finite populations.
    pub fn counts(&self) -> Option<Vec<u64>> {
        let n = self.num_agents.finite()? as f64;
        Some(self.shares.iter().map(|s| (s * n).round() as u64).collect())
    }

    pub fn min_share(&self) -> f64 {
        self.shares.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Same shares, replicated to a population of `num_agents`.
    pub fn with_agents(&self, num_agents: AgentCount) -> Result<Self> {
        Population::new(self.shares.clone(), num_agents)
    }

    /// Agent list in row-major type order (agent ids grouped by type).
    pub fn assignments(&self, space: &TypeSpace) -> Option<Vec<TypePair>> {
        let counts = self.counts()?;
        Some(
            counts
                .iter()
                .enumerate()
                .flat_map(|(r, c)| std::iter::repeat_n(space.pair(r), *c as usize))
                .collect(),
        )
    }
}

/// Empirical distribution of a list of agent types.
pub fn empirical_population(space: &TypeSpace, assignments: &[TypePair]) -> Result<Population> {
    if assignments.is_empty() {
        return Err(Error::validation("assignments", "empty agent list"));
    }
    let mut counts = vec![0u64; space.num_types()];
    for pair in assignments {
        space.check(*pair)?;
        counts[space.index(*pair)] += 1;
    }
    Population::from_counts(&counts)
}
