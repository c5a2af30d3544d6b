use serde::{Deserialize, Serialize};

use super::TransitionKernel;
use crate::error::{Error, Result};
use crate::model::io::{floats, floats2, reals, reals2};
use crate::model::{Real, Scenario, ScenarioDoc};
use crate::solver::SolverConfig;

/// Default bound on the discount weight beyond the horizon.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// A dynamic problem: a static scenario with one configuration type and
/// identity influence, a type kernel, discounting and an initial
/// distribution over preference types.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicScenario {
    pub static_scenario: Scenario,
    pub kernel: TransitionKernel,
    pub discount: f64,
    /// Number of discounted terms kept in every value.
    pub horizon: usize,
    pub rho0: Vec<f64>,
    /// Number of mechanism slots to run; plans cover `horizon + slots − 1`.
    pub slots: usize,
}

impl DynamicScenario {
    pub fn new(
        static_scenario: Scenario,
        kernel: TransitionKernel,
        discount: f64,
        horizon: usize,
        rho0: Vec<f64>,
        slots: usize,
    ) -> Result<Self> {
        let d = DynamicScenario {
            static_scenario,
            kernel,
            discount,
            horizon,
            rho0,
            slots,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.static_scenario;
        s.validate()?;
        self.kernel.validate()?;
        if s.type_space.num_zeta != 1 {
            return Err(Error::validation("type_space.num_zeta", "dynamic scenarios have one configuration type"));
        }
        let identity = s.influence.linear.iter().flatten().all(|a| *a == 1.0)
            && s.influence.quadratic.iter().flatten().all(|b| *b == 0.0);
        if !identity {
            return Err(Error::validation("influence", "dynamic scenarios use identity influence"));
        }
        if self.kernel.num_theta() != s.type_space.num_theta || self.kernel.num_resources() != s.num_resources() {
            return Err(Error::validation("kernel", "kernel shape does not match the type space"));
        }
        for (n, edges) in self.kernel.bin_edges.iter().enumerate() {
            if edges[0] > 0.0 || *edges.last().expect("validated") < s.z_max {
                return Err(Error::validation(
                    "kernel.bin_edges",
                    format!("edges of resource {n} must cover [0, z_max]"),
                ));
            }
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::validation("discount", "must lie in (0, 1)"));
        }
        if self.horizon == 0 || self.discount.powi(self.horizon as i32) > TRUNCATION_TOLERANCE {
            return Err(Error::validation(
                "horizon",
                format!("discount^horizon must be at most {TRUNCATION_TOLERANCE}"),
            ));
        }
        if self.slots == 0 {
            return Err(Error::validation("slots", "must be at least 1"));
        }
        if self.rho0.len() != s.type_space.num_theta || self.rho0.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::validation("rho0", "must be a distribution over preference types"));
        }
        let total: f64 = self.rho0.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::validation("rho0", format!("sums to {total}")));
        }
        Ok(())
    }

    pub fn num_theta(&self) -> usize {
        self.static_scenario.type_space.num_theta
    }

    pub fn num_resources(&self) -> usize {
        self.static_scenario.num_resources()
    }

    /// Slots a plan must cover.
    pub fn plan_length(&self) -> usize {
        self.horizon + self.slots - 1
    }

    /// Smallest horizon whose truncation weight is within tolerance.
    pub fn horizon_for(discount: f64) -> usize {
        let mut h = (TRUNCATION_TOLERANCE.ln() / discount.ln()).ceil().max(1.0) as usize;
        while discount.powi(h as i32) > TRUNCATION_TOLERANCE {
            h += 1;
        }
        h
    }
}

/// Settings of the slot mechanism and the planners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicConfig {
    pub solver: SolverConfig,
    /// Subtract the per-capita share `β C_n` from payments.
    pub rebate: bool,
    /// Grid levels per allocation coordinate in the lookahead oracle.
    pub oracle_grid: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            solver: SolverConfig::default(),
            rebate: false,
            oracle_grid: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub probabilities: Vec<Vec<Vec<Real>>>,
    pub bin_edges: Vec<Vec<Real>>,
}

/// Static scenario keys plus `kernel`, `discount`, `horizon`, `rho0` and an
/// optional `slots` (default 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicScenarioDoc {
    #[serde(flatten)]
    pub static_scenario: ScenarioDoc,
    pub kernel: KernelDoc,
    pub discount: Real,
    pub horizon: usize,
    pub rho0: Vec<Real>,
    #[serde(default = "one")]
    pub slots: usize,
}

fn one() -> usize {
    1
}

impl DynamicScenarioDoc {
    pub fn from_scenario(d: &DynamicScenario) -> Self {
        DynamicScenarioDoc {
            static_scenario: ScenarioDoc::from_scenario(&d.static_scenario),
            kernel: KernelDoc {
                probabilities: d.kernel.probabilities.iter().map(|m| reals2(m)).collect(),
                bin_edges: reals2(&d.kernel.bin_edges),
            },
            discount: Real(d.discount),
            horizon: d.horizon,
            rho0: reals(&d.rho0),
            slots: d.slots,
        }
    }

    pub fn into_scenario(self) -> Result<DynamicScenario> {
        let static_scenario = self.static_scenario.into_scenario()?;
        let kernel = TransitionKernel::new(
            self.kernel.probabilities.iter().map(|m| floats2(m)).collect(),
            floats2(&self.kernel.bin_edges),
        )?;
        DynamicScenario::new(
            static_scenario,
            kernel,
            self.discount.0,
            self.horizon,
            floats(&self.rho0),
            self.slots,
        )
    }
}

pub fn load_dynamic_scenario(source: &[u8]) -> Result<DynamicScenario> {
    let doc: DynamicScenarioDoc = serde_json::from_slice(source).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_scenario()
}

pub fn save_dynamic_scenario(d: &DynamicScenario) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&DynamicScenarioDoc::from_scenario(d)).expect("finite scenario serializes");
    out.push(b'\n');
    out
}
