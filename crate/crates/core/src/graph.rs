//! Influence graph data model.
//!
//! An [`InfluenceGraph`] is `(V, E, p)` plus a non-negative weight per node.
//! Edges are kept sorted by `(src, dst)`, so the out-edges of a node form one
//! contiguous block of edge indices and realization bitmasks are indexed the
//! same way on every platform.

use std::fmt;
use std::ops::Range;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, Violations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn new(index: usize) -> Self {
        NodeId(index as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId::new(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub p: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, p: f64) -> Self {
        Edge {
            src: NodeId::new(src),
            dst: NodeId::new(dst),
            p,
        }
    }
}

/// The on-disk JSON form of a graph. Not validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEdge {
    pub src: usize,
    pub dst: usize,
    pub p: f64,
}

/// Returns every invariant violation in `file`, or `Ok` if there are none.
pub fn validate(file: &GraphFile) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let n = file.n;
    if let Some(w) = &file.weights {
        if w.len() != n {
            out.push(Violation::WeightCount { got: w.len(), n });
        }
        for (i, &x) in w.iter().enumerate() {
            if !(x >= 0.0) || !x.is_finite() {
                out.push(Violation::NegativeWeight {
                    node: NodeId::new(i),
                    weight: x,
                });
            }
        }
    }
    for (i, e) in file.edges.iter().enumerate() {
        for node in [e.src, e.dst] {
            if node >= n {
                out.push(Violation::NodeOutOfRange { index: i, node, n });
            }
        }
        if e.src == e.dst {
            out.push(Violation::SelfLoop {
                node: NodeId::new(e.src),
            });
        }
        if !(0.0..=1.0).contains(&e.p) {
            out.push(Violation::ProbOutOfRange {
                src: NodeId::new(e.src),
                dst: NodeId::new(e.dst),
                p: e.p,
            });
        }
        if i > 0 {
            let prev = &file.edges[i - 1];
            match (prev.src, prev.dst).cmp(&(e.src, e.dst)) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => out.push(Violation::DuplicateEdge {
                    src: NodeId::new(e.src),
                    dst: NodeId::new(e.dst),
                }),
                std::cmp::Ordering::Greater => out.push(Violation::UnsortedEdges { index: i }),
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph {
    n: usize,
    weights: Vec<f64>,
    edges: Vec<Edge>,
    /// `out_start[u]..out_start[u + 1]` are the out-edge indices of `u`.
    out_start: Vec<usize>,
}

impl InfluenceGraph {
    /// Builds a graph with unit weights. Edges may be given in any order.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::with_weights(n, vec![1.0; n], edges)
    }

    /// Builds a weighted graph. Edges may be given in any order; duplicates
    /// and the other invariants are still rejected.
    pub fn with_weights(n: usize, weights: Vec<f64>, mut edges: Vec<Edge>) -> Result<Self> {
        edges.sort_by_key(|e| (e.src, e.dst));
        let file = GraphFile {
            n,
            weights: Some(weights),
            edges: edges
                .iter()
                .map(|e| RawEdge {
                    src: e.src.index(),
                    dst: e.dst.index(),
                    p: e.p,
                })
                .collect(),
        };
        Self::from_file(file)
    }

    /// Strict conversion: the file must already be canonical (sorted edges).
    pub fn from_file(file: GraphFile) -> Result<Self> {
        validate(&file).map_err(|v| Error::InvalidGraph(Violations(v)))?;
        let n = file.n;
        let weights = file.weights.unwrap_or_else(|| vec![1.0; n]);
        let edges: Vec<Edge> = file
            .edges
            .iter()
            .map(|e| Edge::new(e.src, e.dst, e.p))
            .collect();
        let mut out_start = vec![0usize; n + 1];
        for e in &edges {
            out_start[e.src.index() + 1] += 1;
        }
        for u in 0..n {
            out_start[u + 1] += out_start[u];
        }
        Ok(InfluenceGraph {
            n,
            weights,
            edges,
            out_start,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, v: NodeId) -> f64 {
        self.weights[v.index()]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Edge indices of the out-edges of `u`.
    #[inline]
    pub fn out_edges(&self, u: NodeId) -> Range<usize> {
        self.out_start[u.index()]..self.out_start[u.index() + 1]
    }

    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        let r = self.out_edges(u);
        r.end - r.start
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).map(NodeId::new)
    }

    pub fn find_edge(&self, src: NodeId, dst: NodeId) -> Option<usize> {
        let r = self.out_edges(src);
        self.edges[r.clone()]
            .binary_search_by_key(&dst, |e| e.dst)
            .ok()
            .map(|i| r.start + i)
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.n {
            Ok(())
        } else {
            Err(Error::UnknownNode {
                node: v.index(),
                n: self.n,
            })
        }
    }

    /// Node set from a list, rejecting unknown ids.
    pub fn node_set(&self, nodes: &[NodeId]) -> Result<FixedBitSet> {
        let mut s = FixedBitSet::with_capacity(self.n);
        for &v in nodes {
            self.check_node(v)?;
            s.insert(v.index());
        }
        Ok(s)
    }

    pub fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.n)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            weights: if self.has_unit_weights() {
                None
            } else {
                Some(self.weights.clone())
            },
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    src: e.src.index(),
                    dst: e.dst.index(),
                    p: e.p,
                })
                .collect(),
        }
    }

    /// Replaces every node of integer weight `w` with a head node followed by
    /// a directed chain of `w - 1` probability-1 edges. Original edges attach
    /// to heads. Returns the expanded graph and the head of each original node.
    pub fn expand_chains(&self) -> Result<(InfluenceGraph, Vec<NodeId>)> {
        let mut lengths = Vec::with_capacity(self.n);
        for v in self.nodes() {
            let w = self.weight(v);
            if w < 1.0 || w.fract() != 0.0 {
                return Err(Error::NonIntegerWeight { node: v, weight: w });
            }
            lengths.push(w as usize);
        }
        let mut heads = Vec::with_capacity(self.n);
        let mut next = 0usize;
        for &len in &lengths {
            heads.push(NodeId::new(next));
            next += len;
        }
        let mut edges = Vec::with_capacity(self.edges.len() + next - self.n);
        for (v, &len) in lengths.iter().enumerate() {
            let h = heads[v].index();
            for i in 0..len - 1 {
                edges.push(Edge::new(h + i, h + i + 1, 1.0));
            }
        }
        for e in &self.edges {
            edges.push(Edge::new(heads[e.src.index()].index(), heads[e.dst.index()].index(), e.p));
        }
        Ok((InfluenceGraph::new(next, edges)?, heads))
    }
}

/// Seed budget `k` with `1 <= k <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Budget(usize);

impl Budget {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidBudget { k, n });
        }
        Ok(Budget(k))
    }

    #[inline]
    pub fn k(self) -> usize {
        self.0
    }
}

/// Parses and validates a graph. With `lenient`, unsorted edges are re-sorted
/// instead of rejected.
pub fn load_graph(bytes: &[u8], lenient: bool) -> Result<InfluenceGraph> {
    let mut file: GraphFile = serde_json::from_slice(bytes)?;
    if lenient {
        file.edges.sort_by_key(|e| (e.src, e.dst));
    }
    InfluenceGraph::from_file(file)
}

/// Canonical serialization: pretty JSON, weights omitted when all 1, trailing newline.
pub fn save_graph(graph: &InfluenceGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&graph.to_file()).expect("graph serializes");
    out.push(b'\n');
    out
}
