//! Hand-built adaptive policies for the two lower-bound constructions.

use itertools::Itertools;

use crate::constructions::{gen_bad_example, gen_bipartite_gap, BadExampleLayout, BipartiteLayout};
use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::PartialRealization;

use super::Policy;

/// On the bipartite instance: repeatedly seed a left node none of whose
/// right neighbours has been observed activated; stop when no such node
/// remains or the budget `m²` is spent.
#[derive(Debug, Clone)]
pub struct BipartiteGapPolicy {
    layout: BipartiteLayout,
}

impl BipartiteGapPolicy {
    pub fn new(graph: &InfluenceGraph, m: usize) -> Result<Self> {
        let (expected, _, _) = gen_bipartite_gap(m)?;
        if *graph != expected {
            return Err(Error::WrongConstruction(format!(
                "graph is not the bipartite instance for m = {m}"
            )));
        }
        Ok(BipartiteGapPolicy {
            layout: BipartiteLayout::new(m)?,
        })
    }

    pub fn layout(&self) -> &BipartiteLayout {
        &self.layout
    }
}

impl Policy for BipartiteGapPolicy {
    fn budget(&self) -> usize {
        self.layout.budget()
    }

    fn next_seed(&self, graph: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>> {
        if psi.len() >= self.layout.budget() {
            return Ok(None);
        }
        let mut activated = vec![false; self.layout.right];
        for u in psi.domain().ones().filter(|&u| u < self.layout.left) {
            for e in graph.out_edges(NodeId::new(u)) {
                if psi.live_bits().contains(e) {
                    activated[graph.edge(e).dst.index() - self.layout.left] = true;
                }
            }
        }
        let fresh: Vec<usize> = (0..self.layout.right).filter(|&r| !activated[r]).collect();
        // Combinations come out in lexicographic order, i.e. by left node id.
        Ok(fresh
            .into_iter()
            .combinations(self.layout.budget())
            .filter_map(|s| self.layout.left_of(&s))
            .find(|&l| !psi.contains(l)))
    }
}

/// On the bad example: seed all of `V₂`, then unreached `V₃` nodes by
/// lowest id until the budget is spent.
#[derive(Debug, Clone)]
pub struct BadExampleReference {
    layout: BadExampleLayout,
    budget: usize,
    /// Edge index from each `V₃` node's parent to it.
    parent_edge: Vec<usize>,
}

impl BadExampleReference {
    pub fn new(graph: &InfluenceGraph, d: usize, w: f64) -> Result<Self> {
        let (expected, budget, _) = gen_bad_example(d, w)?;
        if *graph != expected {
            return Err(Error::WrongConstruction(format!(
                "graph is not the bad example for d = {d}, w = {w}"
            )));
        }
        let layout = BadExampleLayout { d };
        let parent_edge = layout
            .v3()
            .map(|v| {
                graph
                    .find_edge(NodeId::new(layout.parent(v)), NodeId::new(v))
                    .expect("every V3 node has its parent edge")
            })
            .collect();
        Ok(BadExampleReference {
            layout,
            budget: budget.k(),
            parent_edge,
        })
    }
}

impl Policy for BadExampleReference {
    fn budget(&self) -> usize {
        self.budget
    }

    fn next_seed(&self, graph: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>> {
        if psi.len() >= self.budget {
            return Ok(None);
        }
        let v2 = self.layout.v2();
        let guess = v2.start + psi.len();
        if v2.contains(&guess) && !psi.contains(NodeId::new(guess)) {
            return Ok(Some(NodeId::new(guess)));
        }
        if let Some(v) = v2.clone().find(|&v| !psi.contains(NodeId::new(v))) {
            return Ok(Some(NodeId::new(v)));
        }
        let pick = self.layout.v3().zip(&self.parent_edge).find(|&(v, &e)| {
            !psi.contains(NodeId::new(v)) && psi.edge_state(graph, e) != Some(true)
        });
        Ok(pick.map(|(v, _)| NodeId::new(v)))
    }
}
