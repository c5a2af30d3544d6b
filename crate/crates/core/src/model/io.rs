//! Scenario document format.
//!
//! A scenario is a JSON tree:
//!
//! ```json
//! {
//!   "type_space": {"num_theta": 1, "num_zeta": 1, "num_resources": 1},
//!   "utility": {"weights": [[1.0]]},
//!   "influence": {"linear": [[1.0]], "quadratic": [[0.0]]},
//!   "population": {"shares": [1.0], "num_agents": "infinite"},
//!   "capacities": [1.0],
//!   "beta": 1.0,
//!   "z_max": 10.0
//! }
//! ```
//!
//! `population.shares` is row-major over `(θ, ζ)`; `num_agents` is an integer
//! or the string `"infinite"`. Capacities are per-capita. Reals are written
//! with 17 significant digits so that `load(save(s))` is bit-exact.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{AgentCount, InfluenceParams, Population, Scenario, TypeSpace, UtilityParams};
use crate::error::{Error, Result};

/// A real number that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite real"));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Real)
    }
}

pub(crate) fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

pub(crate) fn reals2(v: &[Vec<f64>]) -> Vec<Vec<Real>> {
    v.iter().map(|r| reals(r)).collect()
}

pub(crate) fn floats(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

pub(crate) fn floats2(v: &[Vec<Real>]) -> Vec<Vec<f64>> {
    v.iter().map(|r| floats(r)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityDoc {
    pub weights: Vec<Vec<Real>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluenceDoc {
    pub linear: Vec<Vec<Real>>,
    pub quadratic: Vec<Vec<Real>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationDoc {
    pub shares: Vec<Real>,
    pub num_agents: AgentCount,
}

/// Serialized form of a [`Scenario`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub type_space: TypeSpace,
    pub utility: UtilityDoc,
    pub influence: InfluenceDoc,
    pub population: PopulationDoc,
    pub capacities: Vec<Real>,
    pub beta: Real,
    pub z_max: Real,
}

impl ScenarioDoc {
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            type_space: s.type_space,
            utility: UtilityDoc {
                weights: reals2(&s.utility.weights),
            },
            influence: InfluenceDoc {
                linear: reals2(&s.influence.linear),
                quadratic: reals2(&s.influence.quadratic),
            },
            population: PopulationDoc {
                shares: reals(s.population.shares()),
                num_agents: s.population.num_agents(),
            },
            capacities: reals(&s.capacities),
            beta: Real(s.beta),
            z_max: Real(s.z_max),
        }
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let ts = self.type_space;
        ts.validate()?;
        let weights = floats2(&self.utility.weights);
        if weights.len() != ts.num_theta || weights.iter().any(|r| r.len() != ts.num_resources) {
            return Err(Error::validation("utility.weights", "shape must be |T| x N"));
        }
        let linear = floats2(&self.influence.linear);
        let quadratic = floats2(&self.influence.quadratic);
        for (name, m) in [("influence.linear", &linear), ("influence.quadratic", &quadratic)] {
            if m.len() != ts.num_zeta || m.iter().any(|r| r.len() != ts.num_resources) {
                return Err(Error::validation(name, "shape must be |Z| x N"));
            }
        }
        let population = Population::new(floats(&self.population.shares), self.population.num_agents)?;
        Scenario::new(
            ts,
            UtilityParams::new(weights)?,
            InfluenceParams::new(linear, quadratic)?,
            population,
            floats(&self.capacities),
            self.beta.0,
            self.z_max.0,
        )
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(source: &[u8]) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_slice(source).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_scenario()
}

/// Serialize a scenario document (pretty-printed, LF line endings).
pub fn save_scenario(s: &Scenario) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&ScenarioDoc::from_scenario(s)).expect("finite scenario serializes");
    out.push(b'\n');
    out
}
