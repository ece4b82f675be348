//! Brute-force reference computations, written against the raw edge list
//! and independent of the library's engines.

#![allow(dead_code)]

use im_lab_core::constructions::gen_random_with;
use im_lab_core::constructions::ProbabilityLaw;
use im_lab_core::{InfluenceGraph, NodeId};
use proptest::prelude::*;

/// Plain BFS over live edges; returns the total weight reached from `seeds`.
pub fn bfs_weight(g: &InfluenceGraph, seeds: &[usize], live: &[bool]) -> f64 {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push(s);
        }
    }
    while let Some(v) = queue.pop() {
        for (e, edge) in g.edges().iter().enumerate() {
            if live[e] && edge.src.index() == v && !seen[edge.dst.index()] {
                seen[edge.dst.index()] = true;
                queue.push(edge.dst.index());
            }
        }
    }
    (0..n).filter(|&v| seen[v]).map(|v| g.weights()[v]).sum()
}

/// `E f(seeds; φ)` where edge `e` leaving a node with `copies[src]` copies is
/// live iff it is live in any of those independent copies, and `fixed[e]`
/// (when set) pins the state of the first copy. Enumerates every bit.
pub fn oracle(g: &InfluenceGraph, seeds: &[usize], copies: &[usize], fixed: &[Option<bool>]) -> f64 {
    let edges = g.edges();
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (e, edge) in edges.iter().enumerate() {
        let c = copies[edge.src.index()];
        let start = if fixed[e].is_some() { 1 } else { 0 };
        for copy in start..c {
            slots.push((e, copy));
        }
    }
    assert!(slots.len() <= 22, "oracle instance too large: {} bits", slots.len());
    let mut total = 0.0;
    for mask in 0u64..(1u64 << slots.len()) {
        let mut live: Vec<bool> = fixed.iter().map(|f| f.unwrap_or(false)).collect();
        let mut pr = 1.0;
        for (i, &(e, _)) in slots.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            let p = edges[e].p;
            pr *= if on { p } else { 1.0 - p };
            live[e] |= on;
        }
        if pr > 0.0 {
            total += pr * bfs_weight(g, seeds, &live);
        }
    }
    total
}

/// `σ^t(S)` by enumeration.
pub fn oracle_aggregate(g: &InfluenceGraph, set: &[usize], t: usize) -> f64 {
    let mut copies = vec![1; g.node_count()];
    for &v in set {
        copies[v] = t;
    }
    oracle(g, set, &copies, &vec![None; g.edge_count()])
}

/// Feedback as a plain per-edge map: edges leaving `dom` take the bits of
/// `masks` (one per domain node, bit `i` = `i`-th out-edge in edge order).
pub fn feedback(g: &InfluenceGraph, dom: &[usize], masks: &[u64]) -> Vec<Option<bool>> {
    let mut fixed = vec![None; g.edge_count()];
    for (&u, &mask) in dom.iter().zip(masks) {
        let mut i = 0;
        for (e, edge) in g.edges().iter().enumerate() {
            if edge.src.index() == u {
                fixed[e] = Some(mask >> i & 1 == 1);
                i += 1;
            }
        }
    }
    fixed
}

pub fn ids(v: &[usize]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId::new(i)).collect()
}

/// Small random graphs with probabilities drawn from a coarse grid (so that
/// 0 and 1 occur) and at most `max_edges` edges.
pub fn small_graph(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = InfluenceGraph> {
    (2..=max_nodes).prop_flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        (
            Just(n),
            proptest::sample::subsequence(pairs, 0..=max_edges.min(m)),
            proptest::collection::vec(0u8..=4, m),
            proptest::collection::vec(1u8..=3, n),
        )
            .prop_map(|(n, pairs, probs, weights)| {
                let edges = pairs
                    .iter()
                    .zip(&probs)
                    .map(|(&(s, d), &q)| im_lab_core::Edge::new(s, d, q as f64 / 4.0))
                    .collect();
                InfluenceGraph::with_weights(n, weights.iter().map(|&w| w as f64).collect(), edges)
                    .expect("valid by construction")
            })
    })
}

/// Random graph from the library generator, for cases needing a seed only.
pub fn seeded_graph(n: usize, p_edge: f64, seed: u64) -> InfluenceGraph {
    gen_random_with(n, p_edge, &ProbabilityLaw::Levels(vec![0.25, 0.5, 0.75, 1.0]), seed).unwrap()
}
