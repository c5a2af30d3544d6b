//! Large-scale VCG mechanisms for network utility maximization.
//!
//! The crate solves the type-level network utility maximization program by
//! per-resource dual bisection, prices allocations with exact VCG payments
//! and with shadow-price payments, measures finite-population incentives to
//! misreport, overlays payments on a simulated price-broadcast algorithm, and
//! extends the mechanism to mean-field dynamics with Markov type evolution.
//!
//! Data-parallel loops run on rayon when the `parallel` feature (default) is
//! enabled; see [`exec`].

pub mod dynamic;
pub mod error;
pub mod exec;
pub mod incentives;
pub mod linalg;
pub mod mechanisms;
pub mod model;
pub mod solver;
pub mod superimpose;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{AgentCount, Population, Report, Scenario, TypePair, TypeSpace};
pub use solver::{PrimalDualSolution, SolverConfig};
