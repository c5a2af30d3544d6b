//! A price-broadcast dual algorithm and a payment rule that reads only its
//! outputs.
//!
//! [`run_algorithm`] knows nothing about payments: a coordinator posts
//! prices, every agent answers with the demand of the type it chooses to
//! play, and the coordinator moves prices along the excess demand.
//! [`superimposed_outcome`] prices the algorithm's final state after the
//! fact, and [`obedience_check`] asks whether any agent gains by playing a
//! type other than its own.

mod algorithm;
mod obedience;
mod overlay;

pub use algorithm::{run_algorithm, Action, AlgorithmConfig, AlgorithmTrace, DecisionRule, Round};
pub use obedience::{obedience_check, ObedienceResult};
pub use overlay::superimposed_outcome;
