//! Exact expected reach under independent edge probabilities.
//!
//! Every exact quantity in the crate reduces to one primitive: the expected
//! weight reachable from a seed set when edge `e` is live independently with
//! probability `q_e`. Conditioning on feedback and taking unions of several
//! independent copies only change the `q_e` (see [`edge_prob`]).
//!
//! Three engines share the primitive:
//!
//! * propagation, when the random part of the graph is a forest hanging off
//!   the seeds (each non-seed node has at most one non-seed in-neighbour);
//! * a subset recursion over the reachable non-seed nodes, `O(3^m · m)`;
//! * plain enumeration of the uncertain edges, `O(2^r · |E'|)`.
//!
//! Nodes reached from the seeds through probability-1 edges are folded into
//! the seed set first, and edges with probability 0 or into seeds are dropped.

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::PartialRealization;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    /// Largest number of uncertain relevant edges the enumeration engine accepts.
    pub edge_limit: usize,
    /// Largest number of uncertain reachable nodes the subset engine accepts.
    pub node_limit: usize,
}

/// Probability that edge `e` is live in the union of `copies` independent
/// copies when the first copy is fixed by `fixed` (if the source was observed).
#[inline]
pub fn edge_prob(p: f64, copies: u32, fixed: Option<bool>) -> f64 {
    match fixed {
        Some(true) => 1.0,
        Some(false) => 1.0 - (1.0 - p).powi(copies as i32 - 1),
        None => 1.0 - (1.0 - p).powi(copies as i32),
    }
}

/// Per-edge probability for a query where node `v` contributes
/// `copies[v]` independent copies of its out-edge block and copy 1 is
/// replaced by `psi` on its domain.
pub fn query_probs<'a>(
    graph: &'a InfluenceGraph,
    copies: &'a [u32],
    psi: Option<&'a PartialRealization>,
) -> impl Fn(usize) -> f64 + 'a {
    move |e| {
        let edge = graph.edge(e);
        let fixed = psi.and_then(|ps| ps.edge_state(graph, e));
        edge_prob(edge.p, copies[edge.src.index()], fixed)
    }
}

const NONE: u32 = u32::MAX;

/// Expected weight reached from `seeds` when edge `e` is live with `prob(e)`.
pub fn expected_reach<P>(
    graph: &InfluenceGraph,
    seeds: &[NodeId],
    prob: P,
    limits: ExactLimits,
) -> Result<f64>
where
    P: Fn(usize) -> f64,
{
    let (base, problem) = build_region(graph, seeds, prob);
    let Some(problem) = problem else {
        return Ok(base);
    };
    if let Some(v) = problem.propagate() {
        return Ok(base + v);
    }
    let m = problem.m;
    let r = problem.uncertain_edges();
    let enum_ok = r <= limits.edge_limit && r < 63;
    let dp_ok = m <= limits.node_limit && m < 31;
    let enum_cost = if enum_ok {
        (1u128 << r) * (problem.edge_total() + m) as u128
    } else {
        u128::MAX
    };
    let dp_cost = if dp_ok {
        3u128.pow(m as u32) * m as u128
    } else {
        u128::MAX
    };
    match (enum_ok, dp_ok) {
        (false, false) => Err(Error::TooLargeForExact {
            what: "uncertain relevant edges",
            size: r as u64,
            limit: limits.edge_limit as u64,
        }),
        _ if dp_cost <= enum_cost => Ok(base + problem.subset_recursion()),
        _ => Ok(base + problem.enumerate()),
    }
}

/// Weight of the certain closure of `seeds` and the uncertain remainder.
fn build_region<P>(graph: &InfluenceGraph, seeds: &[NodeId], prob: P) -> (f64, Option<Region>)
where
    P: Fn(usize) -> f64,
{
    if seeds.is_empty() {
        return (0.0, None);
    }
    let n = graph.node_count();
    let w = graph.weights();

    // Certain closure of the seeds.
    let mut certain = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut base = 0.0;
    for s in seeds {
        if !certain[s.index()] {
            certain[s.index()] = true;
            base += w[s.index()];
            stack.push(s.index());
        }
    }
    let mut certain_list = stack.clone();
    while let Some(x) = stack.pop() {
        for e in graph.out_edges(NodeId::new(x)) {
            let d = graph.edge(e).dst.index();
            if !certain[d] && prob(e) >= 1.0 {
                certain[d] = true;
                base += w[d];
                stack.push(d);
                certain_list.push(d);
            }
        }
    }

    // Uncertain nodes reachable with positive probability.
    let mut local = vec![NONE; n];
    let mut region: Vec<usize> = Vec::new();
    stack.extend(certain_list.iter().copied());
    while let Some(x) = stack.pop() {
        for e in graph.out_edges(NodeId::new(x)) {
            let d = graph.edge(e).dst.index();
            if !certain[d] && local[d] == NONE && prob(e) > 0.0 {
                local[d] = region.len() as u32;
                region.push(d);
                stack.push(d);
            }
        }
    }
    let m = region.len();
    if m == 0 {
        return (base, None);
    }

    // Relevant edges: (source local index or NONE for certain, target local, q).
    let mut from_certain: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut inner: Vec<(usize, usize, f64)> = Vec::new();
    for &x in &certain_list {
        for e in graph.out_edges(NodeId::new(x)) {
            let d = graph.edge(e).dst.index();
            if local[d] != NONE {
                let q = prob(e);
                if q > 0.0 {
                    from_certain[local[d] as usize].push(q);
                }
            }
        }
    }
    for (lx, &x) in region.iter().enumerate() {
        for e in graph.out_edges(NodeId::new(x)) {
            let d = graph.edge(e).dst.index();
            if local[d] != NONE {
                let q = prob(e);
                if q > 0.0 {
                    inner.push((lx, local[d] as usize, q));
                }
            }
        }
    }
    let weights: Vec<f64> = region.iter().map(|&v| w[v]).collect();
    (
        base,
        Some(Region {
            m,
            weights,
            from_certain,
            inner,
        }),
    )
}

/// The uncertain part of a reachability problem, in local indices.
struct Region {
    m: usize,
    weights: Vec<f64>,
    /// Live probabilities of edges from the certain set into each local node.
    from_certain: Vec<Vec<f64>>,
    /// Edges between local nodes.
    inner: Vec<(usize, usize, f64)>,
}

impl Region {
    fn uncertain_edges(&self) -> usize {
        self.from_certain
            .iter()
            .flatten()
            .chain(self.inner.iter().map(|(_, _, q)| q))
            .filter(|&&q| q < 1.0)
            .count()
    }

    fn edge_total(&self) -> usize {
        self.from_certain.iter().map(Vec::len).sum::<usize>() + self.inner.len()
    }

    /// Exact when every local node has at most one local in-neighbour and the
    /// local edges form no cycle: reach events of different parents then
    /// depend on disjoint edge sets.
    fn propagate(&self) -> Option<f64> {
        let mut parent: Vec<Option<(usize, f64)>> = vec![None; self.m];
        for &(x, y, q) in &self.inner {
            if parent[y].is_some() {
                return None;
            }
            parent[y] = Some((x, q));
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.m];
        let mut roots = Vec::new();
        for y in 0..self.m {
            match parent[y] {
                Some((x, _)) => children[x].push(y),
                None => roots.push(y),
            }
        }
        let mut reach = vec![0.0; self.m];
        let mut done = 0;
        let mut stack = roots;
        let mut total = 0.0;
        while let Some(y) = stack.pop() {
            let miss_certain: f64 = self.from_certain[y].iter().map(|q| 1.0 - q).product();
            let miss_parent = match parent[y] {
                Some((x, q)) => 1.0 - reach[x] * q,
                None => 1.0,
            };
            reach[y] = 1.0 - miss_certain * miss_parent;
            total += reach[y] * self.weights[y];
            done += 1;
            stack.extend(children[y].iter().copied());
        }
        // Nodes on a cycle are never popped.
        (done == self.m).then_some(total)
    }

    /// Recursion over the final reached subset `A` of local nodes:
    /// `Q(A)` is the probability that all of `A` is reached using only edges
    /// inside `certain ∪ A`, and the reached set is exactly `A` with
    /// probability `Q(A) · Π_{y ∉ A} miss(y | A)`.
    fn subset_recursion(&self) -> f64 {
        let m = self.m;
        let full = 1usize << m;
        let miss_certain: Vec<f64> = self
            .from_certain
            .iter()
            .map(|qs| qs.iter().map(|q| 1.0 - q).product())
            .collect();
        let mut blk = vec![vec![1.0; m]; m];
        for &(x, y, q) in &self.inner {
            blk[y][x] = 1.0 - q;
        }
        // miss[y][B] = probability that no edge from certain ∪ B reaches y.
        let mut miss = vec![vec![0.0; full]; m];
        for y in 0..m {
            let row = &mut miss[y];
            row[0] = miss_certain[y];
            for b in 1..full {
                let low = b.trailing_zeros() as usize;
                row[b] = row[b & (b - 1)] * blk[y][low];
            }
        }
        let mut q = vec![0.0; full];
        q[0] = 1.0;
        let mut total = 0.0;
        let mut weight_of = vec![0.0; full];
        for a in 1..full {
            let low = a.trailing_zeros() as usize;
            weight_of[a] = weight_of[a & (a - 1)] + self.weights[low];
            let mut s = 0.0;
            let mut b = (a - 1) & a;
            loop {
                let mut term = q[b];
                let mut rest = a & !b;
                while rest != 0 && term != 0.0 {
                    let y = rest.trailing_zeros() as usize;
                    term *= miss[y][b];
                    rest &= rest - 1;
                }
                s += term;
                if b == 0 {
                    break;
                }
                b = (b - 1) & a;
            }
            q[a] = 1.0 - s;
        }
        for a in 1..full {
            let mut pa = q[a];
            let mut rest = (full - 1) & !a;
            while rest != 0 && pa != 0.0 {
                let y = rest.trailing_zeros() as usize;
                pa *= miss[y][a];
                rest &= rest - 1;
            }
            total += pa * weight_of[a];
        }
        total
    }

    /// Sums over every live/blocked assignment of the uncertain edges.
    fn enumerate(&self) -> f64 {
        let m = self.m;
        // Edge list: (source local or NONE for certain, target, q).
        let mut edges: Vec<(u32, usize, f64)> = Vec::new();
        for (y, qs) in self.from_certain.iter().enumerate() {
            edges.extend(qs.iter().map(|&q| (NONE, y, q)));
        }
        edges.extend(self.inner.iter().map(|&(x, y, q)| (x as u32, y, q)));
        let random: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].2 < 1.0).collect();
        let r = random.len();

        let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        let mut roots_fixed: Vec<usize> = Vec::new();
        let mut slot = vec![usize::MAX; edges.len()];
        for (k, &i) in random.iter().enumerate() {
            slot[i] = k;
        }
        let mut roots_random: Vec<(usize, usize)> = Vec::new();
        for (i, &(x, y, _)) in edges.iter().enumerate() {
            match (x == NONE, slot[i] == usize::MAX) {
                (true, true) => roots_fixed.push(y),
                (true, false) => roots_random.push((slot[i], y)),
                (false, _) => out[x as usize].push((slot[i], y)),
            }
        }

        let mut reached = vec![false; m];
        let mut stack = Vec::with_capacity(m);
        let mut total = 0.0;
        let mut live = vec![false; r];
        for mask in 0u64..(1u64 << r) {
            let mut pr = 1.0;
            for (k, &i) in random.iter().enumerate() {
                let on = mask >> k & 1 == 1;
                live[k] = on;
                pr *= if on { edges[i].2 } else { 1.0 - edges[i].2 };
            }
            if pr == 0.0 {
                continue;
            }
            reached.fill(false);
            let mut got = 0.0;
            let seeds = roots_fixed
                .iter()
                .copied()
                .chain(roots_random.iter().filter(|(k, _)| live[*k]).map(|&(_, y)| y));
            for y in seeds {
                if !reached[y] {
                    reached[y] = true;
                    got += self.weights[y];
                    stack.push(y);
                }
            }
            while let Some(x) = stack.pop() {
                for &(k, y) in &out[x] {
                    if !reached[y] && (k == usize::MAX || live[k]) {
                        reached[y] = true;
                        got += self.weights[y];
                        stack.push(y);
                    }
                }
            }
            total += pr * got;
        }
        total
    }
}
