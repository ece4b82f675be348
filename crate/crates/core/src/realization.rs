//! Live-edge realizations, myopic partial realizations, and the reachability
//! utility `f(S, φ)` with its aggregate variant `f^t`.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::rng;

/// Anything that can answer "is edge `e` live?".
pub trait LiveEdges {
    fn is_live(&self, e: usize) -> bool;
}

impl<F: Fn(usize) -> bool> LiveEdges for F {
    #[inline]
    fn is_live(&self, e: usize) -> bool {
        self(e)
    }
}

/// A full realization: bit `e` set iff edge `e` is live.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    live: FixedBitSet,
}

impl Realization {
    pub fn all_blocked(graph: &InfluenceGraph) -> Self {
        Realization {
            live: FixedBitSet::with_capacity(graph.edge_count()),
        }
    }

    pub fn all_live(graph: &InfluenceGraph) -> Self {
        let mut live = FixedBitSet::with_capacity(graph.edge_count());
        live.insert_range(..);
        Realization { live }
    }

    pub fn from_bits(live: FixedBitSet) -> Self {
        Realization { live }
    }

    /// Bit `i` of `mask` is edge `i`. Only valid for graphs with at most 64 edges.
    pub fn from_mask(graph: &InfluenceGraph, mask: u64) -> Self {
        let m = graph.edge_count();
        assert!(m <= 64, "from_mask needs at most 64 edges");
        let mut live = FixedBitSet::with_capacity(m);
        for e in 0..m {
            live.set(e, mask >> e & 1 == 1);
        }
        Realization { live }
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.live
    }

    pub fn set(&mut self, e: usize, live: bool) {
        self.live.set(e, live);
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }
}

impl LiveEdges for Realization {
    #[inline]
    fn is_live(&self, e: usize) -> bool {
        self.live.contains(e)
    }
}

/// A realization drawn from `seed` that is evaluated one edge at a time.
/// Agrees bit-for-bit with [`sample_realization`] for the same seed.
#[derive(Clone, Copy)]
pub struct LazyRealization<'g> {
    graph: &'g InfluenceGraph,
    seed: u64,
}

impl<'g> LazyRealization<'g> {
    pub fn new(graph: &'g InfluenceGraph, seed: u64) -> Self {
        LazyRealization { graph, seed }
    }
}

impl LiveEdges for LazyRealization<'_> {
    #[inline]
    fn is_live(&self, e: usize) -> bool {
        rng::edge_coin(self.seed, e) < self.graph.edge(e).p
    }
}

/// Samples a realization: every edge independently live with its probability.
pub fn sample_realization(graph: &InfluenceGraph, seed: u64) -> Realization {
    let lazy = LazyRealization::new(graph, seed);
    let mut live = FixedBitSet::with_capacity(graph.edge_count());
    for e in 0..graph.edge_count() {
        if lazy.is_live(e) {
            live.insert(e);
        }
    }
    Realization { live }
}

/// Myopic feedback collected so far: the out-edge states of the nodes in `domain`.
/// Bits outside the out-edges of the domain are always zero, so equality of
/// values is equality of feedback.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialRealization {
    domain: FixedBitSet,
    live: FixedBitSet,
}

impl PartialRealization {
    pub fn empty(graph: &InfluenceGraph) -> Self {
        PartialRealization {
            domain: FixedBitSet::with_capacity(graph.node_count()),
            live: FixedBitSet::with_capacity(graph.edge_count()),
        }
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.domain.contains(v.index())
    }

    pub fn domain(&self) -> &FixedBitSet {
        &self.domain
    }

    pub fn domain_nodes(&self) -> Vec<NodeId> {
        self.domain.ones().map(NodeId::new).collect()
    }

    pub fn len(&self) -> usize {
        self.domain.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_clear()
    }

    pub fn live_bits(&self) -> &FixedBitSet {
        &self.live
    }

    /// State of edge `e` as recorded; `None` if its source is not in the domain.
    #[inline]
    pub fn edge_state(&self, graph: &InfluenceGraph, e: usize) -> Option<bool> {
        if self.domain.contains(graph.edge(e).src.index()) {
            Some(self.live.contains(e))
        } else {
            None
        }
    }

    /// Adds `u` with out-edge states taken from `phi`.
    pub fn observe(&mut self, graph: &InfluenceGraph, u: NodeId, phi: &impl LiveEdges) {
        self.domain.insert(u.index());
        for e in graph.out_edges(u) {
            self.live.set(e, phi.is_live(e));
        }
    }

    /// Adds `u` with out-edge states given as a mask over its out-edge block
    /// (bit `i` is the `i`-th out-edge of `u`).
    pub fn observe_mask(&mut self, graph: &InfluenceGraph, u: NodeId, mask: u64) {
        self.domain.insert(u.index());
        for (i, e) in graph.out_edges(u).enumerate() {
            self.live.set(e, mask >> i & 1 == 1);
        }
    }

    /// Local out-edge mask of a domain node.
    pub fn block_mask(&self, graph: &InfluenceGraph, u: NodeId) -> u64 {
        graph
            .out_edges(u)
            .enumerate()
            .filter(|&(_, e)| self.live.contains(e))
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub fn with(&self, graph: &InfluenceGraph, u: NodeId, mask: u64) -> Self {
        let mut next = self.clone();
        next.observe_mask(graph, u, mask);
        next
    }

    /// Hex rendering of the live bitmask, most significant edge first.
    pub fn live_hex(&self) -> String {
        let blocks = self.live.as_slice();
        if blocks.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, b) in blocks.iter().rev().enumerate() {
            if i == 0 {
                s.push_str(&format!("{b:x}"));
            } else {
                s.push_str(&format!("{b:08x}"));
            }
        }
        s
    }
}

/// `φ_S`: the feedback of node set `S` under `phi`.
pub fn restrict(graph: &InfluenceGraph, phi: &Realization, set: &[NodeId]) -> PartialRealization {
    let mut psi = PartialRealization::empty(graph);
    for &u in set {
        psi.observe(graph, u, phi);
    }
    psi
}

/// `φ ∼ ψ`.
pub fn consistent(graph: &InfluenceGraph, phi: &Realization, psi: &PartialRealization) -> bool {
    psi.domain
        .ones()
        .flat_map(|u| graph.out_edges(NodeId::new(u)))
        .all(|e| phi.is_live(e) == psi.live.contains(e))
}

/// Per-node choice of which realizations supply the node's out-edge block;
/// the block is the union of the selected realizations' blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedRealization {
    arity: usize,
    selectors: Vec<u32>,
}

impl ComposedRealization {
    /// Every node selects the realizations in `mask` (bit `i` = realization `i`).
    pub fn uniform(graph: &InfluenceGraph, arity: usize, mask: u32) -> Self {
        assert!((1..=32).contains(&arity));
        ComposedRealization {
            arity,
            selectors: vec![mask; graph.node_count()],
        }
    }

    /// Selectors of `f^t`: nodes of `set` take the union of all `t`
    /// realizations, every other node takes the first.
    pub fn aggregate(graph: &InfluenceGraph, set: &[NodeId], t: usize) -> Self {
        let mut c = Self::uniform(graph, t, 1);
        for &u in set {
            c.select(u, all_mask(t));
        }
        c
    }

    pub fn select(&mut self, v: NodeId, mask: u32) {
        assert!(mask != 0 && mask >> self.arity == 0, "selector out of range");
        self.selectors[v.index()] = mask;
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn selector(&self, v: NodeId) -> u32 {
        self.selectors[v.index()]
    }
}

#[inline]
pub(crate) fn all_mask(t: usize) -> u32 {
    if t >= 32 {
        u32::MAX
    } else {
        (1u32 << t) - 1
    }
}

/// Builds the realization whose out-edge block at every node is the union
/// of the selected realizations' blocks.
pub fn compose(
    graph: &InfluenceGraph,
    selectors: &ComposedRealization,
    phis: &[Realization],
) -> Result<Realization> {
    if phis.len() != selectors.arity {
        return Err(Error::SelectorArityMismatch {
            expected: selectors.arity,
            got: phis.len(),
        });
    }
    let mut live = FixedBitSet::with_capacity(graph.edge_count());
    for u in graph.nodes() {
        let mask = selectors.selector(u);
        for e in graph.out_edges(u) {
            let on = phis
                .iter()
                .enumerate()
                .any(|(i, phi)| mask >> i & 1 == 1 && phi.is_live(e));
            live.set(e, on);
        }
    }
    Ok(Realization { live })
}

/// `f(S, φ)`: total weight of nodes reachable from `S` over live edges.
pub fn reachable_utility(graph: &InfluenceGraph, set: &[NodeId], phi: &impl LiveEdges) -> f64 {
    let mut r = Reacher::new(graph.node_count());
    r.expand(graph, set.iter().copied(), |e| phi.is_live(e))
}

/// `f^t(S, φ¹, …, φ^t)`.
pub fn aggregate_utility(graph: &InfluenceGraph, set: &[NodeId], phis: &[Realization]) -> f64 {
    assert!(!phis.is_empty(), "aggregate utility needs t >= 1");
    let sel = ComposedRealization::aggregate(graph, set, phis.len());
    let phi = compose(graph, &sel, phis).expect("arity matches by construction");
    reachable_utility(graph, set, &phi)
}

/// Reusable traversal state. Marks survive between calls to [`Reacher::expand`]
/// until [`Reacher::reset`]; marks made while a trail is open can be undone.
pub struct Reacher {
    mark: Vec<u32>,
    epoch: u32,
    stack: Vec<u32>,
    trail: Vec<u32>,
    tracking: bool,
}

impl Reacher {
    pub fn new(n: usize) -> Self {
        Reacher {
            mark: vec![0; n],
            epoch: 1,
            stack: Vec::new(),
            trail: Vec::new(),
            tracking: false,
        }
    }

    pub fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.fill(0);
            self.epoch = 1;
        }
        self.trail.clear();
        self.tracking = false;
    }

    #[inline]
    pub fn is_reached(&self, v: usize) -> bool {
        self.mark[v] == self.epoch
    }

    /// Starts recording newly reached nodes so they can be rolled back.
    pub fn begin_trail(&mut self) {
        self.trail.clear();
        self.tracking = true;
    }

    pub fn rollback(&mut self) {
        for &v in &self.trail {
            self.mark[v as usize] = 0;
        }
        self.trail.clear();
        self.tracking = false;
    }

    #[inline]
    fn visit(&mut self, v: usize) -> bool {
        if self.mark[v] == self.epoch {
            return false;
        }
        self.mark[v] = self.epoch;
        if self.tracking {
            self.trail.push(v as u32);
        }
        true
    }

    /// Marks every source and expands all of them (even ones already marked)
    /// through live edges. Returns the weight of newly marked nodes.
    pub fn expand<F>(
        &mut self,
        graph: &InfluenceGraph,
        sources: impl IntoIterator<Item = NodeId>,
        live: F,
    ) -> f64
    where
        F: Fn(usize) -> bool,
    {
        let weights = graph.weights();
        let mut gained = 0.0;
        self.stack.clear();
        for s in sources {
            if self.visit(s.index()) {
                gained += weights[s.index()];
            }
            self.stack.push(s.0);
        }
        while let Some(x) = self.stack.pop() {
            for e in graph.out_edges(NodeId(x)) {
                let d = graph.edge(e).dst.index();
                if self.mark[d] != self.epoch && live(e) {
                    self.visit(d);
                    gained += weights[d];
                    self.stack.push(d as u32);
                }
            }
        }
        gained
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn two() -> InfluenceGraph {
        InfluenceGraph::new(2, vec![Edge::new(0, 1, 0.5)]).unwrap()
    }

    #[test]
    fn sample_extremes() {
        let g = InfluenceGraph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        assert_eq!(sample_realization(&g, 9), Realization::all_live(&g));
        let g0 = InfluenceGraph::new(3, vec![Edge::new(0, 1, 0.0), Edge::new(1, 2, 0.0)]).unwrap();
        assert_eq!(sample_realization(&g0, 9), Realization::all_blocked(&g0));
    }

    #[test]
    fn bernoulli_fraction_over_many_seeds() {
        let g = two();
        let live = (0..100_000u64)
            .filter(|&s| sample_realization(&g, s).is_live(0))
            .count();
        let frac = live as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn restrict_cases() {
        let g = two();
        let phi = Realization::all_live(&g);
        let empty = restrict(&g, &phi, &[]);
        assert!(empty.is_empty());
        assert_eq!(empty, PartialRealization::empty(&g));

        let full = restrict(&g, &phi, &[NodeId(0), NodeId(1)]);
        assert_eq!(full.len(), 2);
        assert_eq!(full.edge_state(&g, 0), Some(true));

        let only1 = restrict(&g, &phi, &[NodeId(1)]);
        assert_eq!(only1.domain_nodes(), vec![NodeId(1)]);
        assert!(only1.live_bits().is_clear());
    }

    #[test]
    fn consistency() {
        let g = two();
        let live = Realization::all_live(&g);
        assert!(consistent(&g, &live, &PartialRealization::empty(&g)));
        assert!(consistent(&g, &live, &restrict(&g, &live, &[NodeId(0)])));
        let blocked = restrict(&g, &Realization::all_blocked(&g), &[NodeId(0)]);
        assert!(!consistent(&g, &live, &blocked));
    }

    #[test]
    fn compose_cases() {
        let g = two();
        let a = Realization::all_blocked(&g);
        let b = Realization::all_live(&g);
        let ident = ComposedRealization::uniform(&g, 1, 1);
        assert_eq!(compose(&g, &ident, std::slice::from_ref(&b)).unwrap(), b);

        let mut sel = ComposedRealization::uniform(&g, 2, 1);
        sel.select(NodeId(0), 0b11);
        assert_eq!(compose(&g, &sel, &[a.clone(), b.clone()]).unwrap(), b);
        assert_eq!(compose(&g, &sel, &[b.clone(), a.clone()]).unwrap(), b);

        let err = compose(&g, &sel, &[a]).unwrap_err();
        assert!(matches!(err, Error::SelectorArityMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn reachability_values() {
        let g = InfluenceGraph::new(3, vec![Edge::new(0, 1, 0.5), Edge::new(1, 2, 0.5)]).unwrap();
        let phi = Realization::all_live(&g);
        assert_eq!(reachable_utility(&g, &[], &phi), 0.0);
        assert_eq!(reachable_utility(&g, &[NodeId(0)], &phi), 3.0);

        // star: center 0 -> a=1, b=2, c=3; only edge to b live; b weighs 5
        let star = InfluenceGraph::with_weights(
            4,
            vec![1.0, 1.0, 5.0, 1.0],
            vec![Edge::new(0, 1, 0.5), Edge::new(0, 2, 0.5), Edge::new(0, 3, 0.5)],
        )
        .unwrap();
        let phi = Realization::from_mask(&star, 0b010);
        assert_eq!(reachable_utility(&star, &[NodeId(0)], &phi), 6.0);
    }

    #[test]
    fn aggregate_cases() {
        let g = two();
        let blocked = Realization::all_blocked(&g);
        let live = Realization::all_live(&g);
        let phis = [blocked.clone(), live.clone()];
        assert_eq!(aggregate_utility(&g, &[NodeId(0)], &phis), 2.0);
        assert_eq!(aggregate_utility(&g, &[NodeId(1)], &phis), 1.0);
        assert_eq!(
            aggregate_utility(&g, &[NodeId(0)], std::slice::from_ref(&live)),
            reachable_utility(&g, &[NodeId(0)], &live)
        );
    }

    #[test]
    fn long_chains_do_not_recurse() {
        let n = 200_000;
        let edges = (0..n - 1).map(|i| Edge::new(i, i + 1, 1.0)).collect();
        let g = InfluenceGraph::new(n, edges).unwrap();
        let phi = Realization::all_live(&g);
        assert_eq!(reachable_utility(&g, &[NodeId(0)], &phi), n as f64);
    }

    #[test]
    fn lazy_matches_materialized() {
        let g = InfluenceGraph::new(
            4,
            vec![Edge::new(0, 1, 0.3), Edge::new(0, 2, 0.6), Edge::new(2, 3, 0.9)],
        )
        .unwrap();
        for seed in 0..50 {
            let full = sample_realization(&g, seed);
            let lazy = LazyRealization::new(&g, seed);
            for e in 0..g.edge_count() {
                assert_eq!(full.is_live(e), lazy.is_live(e));
            }
        }
    }

    #[test]
    fn rollback_restores_marks() {
        let g = InfluenceGraph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let mut r = Reacher::new(3);
        assert_eq!(r.expand(&g, [NodeId(1)], |_| true), 2.0);
        r.begin_trail();
        assert_eq!(r.expand(&g, [NodeId(0)], |_| true), 1.0);
        r.rollback();
        assert!(!r.is_reached(0));
        assert!(r.is_reached(1) && r.is_reached(2));
    }
}
