use std::fmt;

use thiserror::Error;

use crate::graph::NodeId;

/// A single invariant violation found while validating a graph description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: NodeId, dst: NodeId },
    #[error("self loop on node {node}")]
    SelfLoop { node: NodeId },
    #[error("edge ({src}, {dst}) has probability {p} outside [0, 1]")]
    ProbOutOfRange { src: NodeId, dst: NodeId, p: f64 },
    #[error("node {node} has negative weight {weight}")]
    NegativeWeight { node: NodeId, weight: f64 },
    #[error("edge #{index} is out of (src, dst) order")]
    UnsortedEdges { index: usize },
    #[error("edge #{index} references node {node} but n = {n}")]
    NodeOutOfRange { index: usize, node: usize, n: usize },
    #[error("weights has {got} entries but n = {n}")]
    WeightCount { got: usize, n: usize },
}

/// Wrapper so the full violation list renders on one line.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(Violations),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("node {node} has non-integer weight {weight}")]
    NonIntegerWeight { node: NodeId, weight: f64 },
    #[error("budget k = {k} must satisfy 1 <= k <= n = {n}")]
    InvalidBudget { k: usize, n: usize },
    #[error("node {node} is not in the graph (n = {n})")]
    UnknownNode { node: usize, n: usize },
    #[error("too large for exact evaluation: {what} ({size} > {limit})")]
    TooLargeForExact {
        what: &'static str,
        size: u64,
        limit: u64,
    },
    #[error("selector arity mismatch: composition expects {expected} realizations, got {got}")]
    SelectorArityMismatch { expected: usize, got: usize },
    #[error("policy selected more than its budget of {budget} seeds")]
    PolicyViolatesBudget { budget: usize },
    #[error("policy selected node {node} twice")]
    PolicyRepeatsSeed { node: NodeId },
    #[error("decision tree exceeds {limit} nodes")]
    TreeTooLarge { limit: usize },
    #[error("graph does not match construction: {0}")]
    WrongConstruction(String),
    #[error("construction too large: {what} ({size} > {limit})")]
    ConstructionTooLarge {
        what: &'static str,
        size: u64,
        limit: u64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for refusals caused by a resource guard rather than bad input.
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            Error::TooLargeForExact { .. }
                | Error::TreeTooLarge { .. }
                | Error::ConstructionTooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
