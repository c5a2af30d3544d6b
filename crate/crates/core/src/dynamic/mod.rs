//! Mean-field dynamics with Markov type evolution.
//!
//! Every agent's preference type follows a Markov chain whose transition
//! probabilities depend on the (binned) allocation it receives. With a
//! continuum of agents the population distribution evolves
//! deterministically, so a planner can compute an open-loop plan
//! (allocation per type and slot) and every agent's discounted value
//! under it. The slot mechanism allocates by maximizing reported-share
//! weighted discounted values and charges shadow prices.

mod kernel;
mod mean_field;
mod mechanism;
mod plan;
mod scenario;
mod value;

pub use kernel::{TransitionKernel, DEFAULT_BINS};
pub use mean_field::{largest_remainder, mean_field_monte_carlo, mean_field_step, total_variation, MeanFieldState};
pub use mechanism::{
    dynamic_incentive_gap, dynamic_mechanism_step, slot_payoff, dynamic_incentive_bound, DynamicGapRow, DynamicGapTable,
    SlotOutcome,
};
pub use plan::{oracle_plan_size, plan_policy, PlanMode, Policy, ORACLE_MAX_NODES};
pub use scenario::{load_dynamic_scenario, save_dynamic_scenario, DynamicConfig, DynamicScenario, DynamicScenarioDoc};
pub use value::{continuation_value, plan_welfare, value_u_sigma, welfare_from};
