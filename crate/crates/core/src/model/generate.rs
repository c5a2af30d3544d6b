use rand::Rng;

use super::{AgentCount, InfluenceParams, Population, Scenario, TypeSpace, UtilityParams};

/// Parameter ranges for random instances.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioShape {
    pub num_theta: usize,
    pub num_zeta: usize,
    pub num_resources: usize,
    /// Finite head count (random counts, each type gets at least one agent)
    /// or a mean-field population with random positive shares.
    pub num_agents: AgentCount,
    pub weight_range: (f64, f64),
    pub linear_range: (f64, f64),
    pub quadratic_max: f64,
    pub capacity_range: (f64, f64),
    pub beta: f64,
}

impl ScenarioShape {
    pub fn new(num_theta: usize, num_zeta: usize, num_resources: usize) -> Self {
        ScenarioShape {
            num_theta,
            num_zeta,
            num_resources,
            num_agents: AgentCount::Infinite,
            weight_range: (0.5, 2.0),
            linear_range: (0.5, 1.5),
            quadratic_max: 0.3,
            capacity_range: (0.5, 2.0),
            beta: 1.0,
        }
    }

    pub fn agents(mut self, num_agents: AgentCount) -> Self {
        self.num_agents = num_agents;
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn quadratic_max(mut self, b: f64) -> Self {
        self.quadratic_max = b;
        self
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Draw a valid scenario. The allocation cap is set so that every resource
/// is congested at zero price.
pub fn random_scenario<R: Rng>(rng: &mut R, shape: &ScenarioShape) -> Scenario {
    let ts = TypeSpace::new(shape.num_theta, shape.num_zeta, shape.num_resources)
        .expect("shape dimensions are positive");
    let n = shape.num_resources;
    let weights = (0..shape.num_theta)
        .map(|_| (0..n).map(|_| uniform(rng, shape.weight_range)).collect())
        .collect();
    let linear: Vec<Vec<f64>> = (0..shape.num_zeta)
        .map(|_| (0..n).map(|_| uniform(rng, shape.linear_range)).collect())
        .collect();
    let quadratic = (0..shape.num_zeta)
        .map(|_| (0..n).map(|_| uniform(rng, (0.0, shape.quadratic_max))).collect())
        .collect();
    let k = ts.num_types();
    let population = match shape.num_agents {
        AgentCount::Finite(total) => {
            assert!(total as usize >= k, "need at least one agent per type");
            let mut counts = vec![1u64; k];
            for _ in 0..(total as usize - k) {
                counts[rng.gen_range(0..k)] += 1;
            }
            Population::from_counts(&counts).expect("positive counts")
        }
        AgentCount::Infinite => {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut shares: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let head: f64 = shares[..k - 1].iter().sum();
            shares[k - 1] = 1.0 - head;
            Population::mean_field(shares).expect("normalized shares")
        }
    };
    let capacities: Vec<f64> = (0..n).map(|_| uniform(rng, shape.capacity_range)).collect();
    let min_linear = linear.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let max_capacity = capacities.iter().cloned().fold(0.0, f64::max);
    // load at the cap is at least z_max · min a, so this covers twice the capacity
    let z_max = (2.0 * max_capacity / min_linear).max(50.0);
    Scenario::new(
        ts,
        UtilityParams::new(weights).expect("positive weights"),
        InfluenceParams::new(linear, quadratic).expect("valid influence"),
        population,
        capacities,
        shape.beta,
        z_max,
    )
    .expect("generated scenario is valid")
}
