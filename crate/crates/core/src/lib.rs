//! Opinion-aware influence maximization.
//!
//! Nodes carry a fixed opinion toward a target item (positive, neutral or
//! negative). Influence spreads by independent cascade, and the objective is
//! the expected number of positively activated nodes minus the expected
//! number of negatively activated ones. Seeds are selected by greedy search
//! over a signed reverse-reachable sample pool, sandwiched between modular
//! upper and lower bounds.

pub mod baselines;
pub mod error;
pub mod fixtures;
pub mod graph;
mod linalg;
pub mod oic;
pub mod opinion;
pub mod rng;
pub mod rr;
pub mod selector;
pub mod synth;
pub mod world;

pub use error::{Error, Result};
pub use graph::{Edge, Graph, IdMap, NodeId};
pub use oic::{evaluate, simulate_once, SpreadEstimate};
pub use opinion::{Opinion, OpinionPartition};
pub use rr::{build_pool, SamplingMode, SamplingPlan, SignedSamplePool};
pub use selector::{build_bound_tables, sandwich_greedy, BoundTables, SandwichOptions, SandwichResult};

pub use world::{brute_force_opt, exact_objective, OracleResult};
