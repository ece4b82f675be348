//! Adaptive and non-adaptive influence maximization under the independent
//! cascade model with myopic feedback.
//!
//! The crate provides the graph model, live-edge realizations, exact and
//! Monte Carlo spread evaluation (including the aggregate spread `σ^t` over
//! `t` independent realizations), greedy and optimal policies, decision trees,
//! and generators for the lower-bound and counterexample constructions.

pub mod constructions;
pub mod error;
pub mod graph;
pub mod policy;
pub mod realization;
pub mod rng;
pub mod spread;

pub use error::{Error, Result, Violation};
pub use graph::{load_graph, save_graph, Budget, Edge, InfluenceGraph, NodeId};
pub use realization::{PartialRealization, Realization};
pub use spread::{EstimatorConfig, Mode, SpreadEstimate};
