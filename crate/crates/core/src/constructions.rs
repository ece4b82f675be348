//! Graph families: the bipartite lower-bound instance, the greedy bad
//! example, the `G(w)` wrapper, and random graphs for test corpora.

use std::collections::HashMap;
use std::f64::consts::E;
use std::ops::Range;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Budget, Edge, InfluenceGraph, NodeId};
use crate::rng::{derive_seed, stream};

/// Largest node count any generator will build.
pub const NODE_GUARD: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", content = "params", rename_all = "kebab-case")]
pub enum Construction {
    BipartiteGap {
        m: usize,
    },
    BadExample {
        d: usize,
        w: f64,
    },
    GOfW {
        w: f64,
        base_nodes: usize,
    },
    Random {
        n: usize,
        p_edge: f64,
        p_low: f64,
        p_high: f64,
        seed: u64,
    },
}

/// Sidecar describing how a graph was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(flatten)]
    pub construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_real: Option<f64>,
    /// For the bipartite instance: the right-hand subset of each left node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<Vec<usize>>>,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Node layout of the bipartite instance with parameter `m`: left nodes
/// `0..|L|` in lexicographic order of their `m²`-subsets of the `m³` right
/// nodes, right nodes after them.
#[derive(Debug, Clone)]
pub struct BipartiteLayout {
    pub m: usize,
    pub left: usize,
    pub right: usize,
    subsets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl BipartiteLayout {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("bipartite construction needs m >= 2, got {m}")));
        }
        let right = m.pow(3);
        let size = m * m;
        let left = binomial(right as u64, size as u64);
        if left.saturating_add(right as u64) > NODE_GUARD {
            return Err(Error::ConstructionTooLarge {
                what: "bipartite left nodes",
                size: left,
                limit: NODE_GUARD,
            });
        }
        let subsets: Vec<Vec<usize>> = (0..right).combinations(size).collect();
        let index = subsets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(BipartiteLayout {
            m,
            left: left as usize,
            right,
            subsets,
            index,
        })
    }

    pub fn budget(&self) -> usize {
        self.m * self.m
    }

    pub fn right_node(&self, r: usize) -> NodeId {
        NodeId::new(self.left + r)
    }

    /// Right-hand subset (as right indices) of left node `l`.
    pub fn subset(&self, l: usize) -> &[usize] {
        &self.subsets[l]
    }

    /// Left node owning the sorted subset `s` of right indices.
    pub fn left_of(&self, s: &[usize]) -> Option<NodeId> {
        self.index.get(s).map(|&i| NodeId::new(i))
    }
}

/// The bipartite graph `L → R` with `|R| = m³`, one left node per
/// `m²`-subset of `R`, edge probability `1/m`, budget `m²`.
pub fn gen_bipartite_gap(m: usize) -> Result<(InfluenceGraph, Budget, Metadata)> {
    let layout = BipartiteLayout::new(m)?;
    let p = 1.0 / m as f64;
    let mut edges = Vec::with_capacity(layout.left * layout.budget());
    for l in 0..layout.left {
        for &r in layout.subset(l) {
            edges.push(Edge::new(l, layout.left + r, p));
        }
    }
    let n = layout.left + layout.right;
    let graph = InfluenceGraph::new(n, edges)?;
    let budget = Budget::new(layout.budget(), n)?;
    let meta = Metadata {
        construction: Construction::BipartiteGap { m },
        budget: Some(budget.k()),
        budget_real: Some(budget.k() as f64),
        subsets: Some(layout.subsets.clone()),
    };
    Ok((graph, budget, meta))
}

/// Node layout of the bad example: `V₁ = 0..d−1`, `V₂ = d−1..2d−1`,
/// `V₃ = 2d−1..4d−1`; the `j`-th node of `V₂` points to the `2j`-th and
/// `(2j+1)`-th nodes of `V₃` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadExampleLayout {
    pub d: usize,
}

impl BadExampleLayout {
    pub fn v1(&self) -> Range<usize> {
        0..self.d - 1
    }

    pub fn v2(&self) -> Range<usize> {
        self.d - 1..2 * self.d - 1
    }

    pub fn v3(&self) -> Range<usize> {
        2 * self.d - 1..4 * self.d - 1
    }

    pub fn node_count(&self) -> usize {
        4 * self.d - 1
    }

    /// `V₂` parent of a `V₃` node.
    pub fn parent(&self, v3: usize) -> usize {
        self.v2().start + (v3 - self.v3().start) / 2
    }
}

/// The real-valued budget `(e+3)/(e+1)·d`.
pub fn bad_example_budget_real(d: usize) -> f64 {
    (E + 3.0) / (E + 1.0) * d as f64
}

pub fn gen_bad_example(d: usize, w: f64) -> Result<(InfluenceGraph, Budget, Metadata)> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("bad example needs d >= 2, got {d}")));
    }
    if !(w >= 1.0) || !w.is_finite() {
        return Err(Error::InvalidArgument(format!("bad example needs w >= 1, got {w}")));
    }
    let layout = BadExampleLayout { d };
    let n = layout.node_count();
    if n as u64 > NODE_GUARD {
        return Err(Error::ConstructionTooLarge {
            what: "bad example nodes",
            size: n as u64,
            limit: NODE_GUARD,
        });
    }
    let mut edges = Vec::with_capacity((d - 1) * d + 2 * d);
    let p12 = 1.0 / d as f64;
    let p23 = E / (E + 1.0);
    for a in layout.v1() {
        for b in layout.v2() {
            edges.push(Edge::new(a, b, p12));
        }
    }
    for (j, b) in layout.v2().enumerate() {
        let c = layout.v3().start + 2 * j;
        edges.push(Edge::new(b, c, p23));
        edges.push(Edge::new(b, c + 1, p23));
    }
    let mut weights = vec![1.0; n];
    for v in layout.v3() {
        weights[v] = w;
    }
    let graph = InfluenceGraph::with_weights(n, weights, edges)?;
    let real = bad_example_budget_real(d);
    let budget = Budget::new((real.round() as usize).min(n), n)?;
    let meta = Metadata {
        construction: Construction::BadExample { d, w },
        budget: Some(budget.k()),
        budget_real: Some(real),
        subsets: None,
    };
    Ok((graph, budget, meta))
}

/// `p_j = 1 − (1 − 1/d)^j`: activation probability of a `V₂` node after `j`
/// seeds in `V₁`.
pub fn bad_example_p(d: usize, j: usize) -> f64 {
    1.0 - (1.0 - 1.0 / d as f64).powi(j as i32)
}

/// Marginal gains `(M1, M2, M3)` of the next `V₁`, `V₂` and `V₃` node after
/// `j` seeds in `V₁`.
pub fn bad_example_marginals(d: usize, w: f64, j: usize) -> (f64, f64, f64) {
    let p = bad_example_p(d, j);
    let chain = 1.0 + 2.0 * E * w / (E + 1.0);
    let m2 = (1.0 - p) * chain;
    let m3 = (p / (E + 1.0) + (1.0 - p)) * w;
    (1.0 + m2, m2, m3)
}

/// Greedy value after all of `V₁` and `v2_picks` nodes of `V₂`.
pub fn bad_example_greedy_value(d: usize, w: f64, v2_picks: f64) -> f64 {
    let df = d as f64;
    let chain = 1.0 + 2.0 * E * w / (E + 1.0);
    let reach = bad_example_p(d, d - 1);
    (df - 1.0) + (v2_picks + reach * (df - v2_picks)) * chain
}

/// Reference values for the bad example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadExampleClosedForms {
    pub d: usize,
    pub w: f64,
    pub budget: usize,
    pub budget_real: f64,
    /// `2d/(e+1) + 1`, the `V₂` pick count under the real budget.
    pub v2_picks_real: f64,
    /// `k − (d − 1)`, the `V₂` pick count under the integer budget.
    pub v2_picks_at_budget: usize,
    pub greedy_closed_form: f64,
    pub greedy_closed_form_at_budget: f64,
    /// `2dw`, approached by the adaptive optimum.
    pub opt_adaptive_upper: f64,
    /// `(e² + 1)/(e + 1)²`.
    pub limit_ratio: f64,
    /// `2(e² + 1)/(e + 1)²`, the limit of `greedy/(dw)`.
    pub limit_greedy_per_dw: f64,
}

pub fn bad_example_closed_forms(d: usize, w: f64) -> BadExampleClosedForms {
    let df = d as f64;
    let real = bad_example_budget_real(d);
    let n = 4 * d - 1;
    let budget = (real.round() as usize).min(n);
    let v2_picks_real = 2.0 * df / (E + 1.0) + 1.0;
    let v2_picks_at_budget = budget.saturating_sub(d - 1).min(d);
    BadExampleClosedForms {
        d,
        w,
        budget,
        budget_real: real,
        v2_picks_real,
        v2_picks_at_budget,
        greedy_closed_form: bad_example_greedy_value(d, w, v2_picks_real),
        greedy_closed_form_at_budget: bad_example_greedy_value(d, w, v2_picks_at_budget as f64),
        opt_adaptive_upper: 2.0 * df * w,
        limit_ratio: limit_ratio(),
        limit_greedy_per_dw: 2.0 * limit_ratio(),
    }
}

/// `(e² + 1)/(e + 1)²`.
pub fn limit_ratio() -> f64 {
    (E * E + 1.0) / ((E + 1.0) * (E + 1.0))
}

/// `(1 − ε)·2dw`.
pub fn opt_adaptive_lower(d: usize, w: f64, eps: f64) -> f64 {
    (1.0 - eps) * 2.0 * d as f64 * w
}

/// `G(w)`: an edgeless copy `G₁` of the base nodes (weight 1), each pointing
/// with probability 1 to its twin in `G₂`, a copy of the base graph with
/// weights multiplied by `w`. Node `i` of `G₁` is `i`, its twin is `n + i`.
pub fn gen_g_of_w(base: &InfluenceGraph, w: f64) -> Result<(InfluenceGraph, Metadata)> {
    if !base.has_unit_weights() {
        return Err(Error::InvalidArgument("G(w) needs a unit-weight base graph".into()));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidArgument(format!("G(w) needs w > 0, got {w}")));
    }
    let n = base.node_count();
    let mut edges: Vec<Edge> = (0..n).map(|i| Edge::new(i, n + i, 1.0)).collect();
    edges.extend(
        base.edges()
            .iter()
            .map(|e| Edge::new(n + e.src.index(), n + e.dst.index(), e.p)),
    );
    let mut weights = vec![1.0; 2 * n];
    weights[n..].fill(w);
    let graph = InfluenceGraph::with_weights(2 * n, weights, edges)?;
    let meta = Metadata {
        construction: Construction::GOfW { w, base_nodes: n },
        budget: None,
        budget_real: None,
        subsets: None,
    };
    Ok((graph, meta))
}

/// How edge probabilities of a random graph are drawn.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityLaw {
    Uniform { low: f64, high: f64 },
    Levels(Vec<f64>),
}

/// Directed Erdős–Rényi skeleton with uniform edge probabilities in `[p_low, p_high]`.
pub fn gen_random(n: usize, p_edge: f64, p_low: f64, p_high: f64, seed: u64) -> Result<InfluenceGraph> {
    if !(0.0..=1.0).contains(&p_low) || !(p_low..=1.0).contains(&p_high) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= p_low <= p_high <= 1, got [{p_low}, {p_high}]"
        )));
    }
    gen_random_with(n, p_edge, &ProbabilityLaw::Uniform { low: p_low, high: p_high }, seed)
}

pub fn gen_random_with(n: usize, p_edge: f64, law: &ProbabilityLaw, seed: u64) -> Result<InfluenceGraph> {
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::InvalidArgument(format!("p_edge must lie in [0, 1], got {p_edge}")));
    }
    if n as u64 > NODE_GUARD {
        return Err(Error::ConstructionTooLarge {
            what: "random graph nodes",
            size: n as u64,
            limit: NODE_GUARD,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::GENERATOR, 0));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || rng.gen::<f64>() >= p_edge {
                continue;
            }
            let p = match law {
                ProbabilityLaw::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
                ProbabilityLaw::Levels(levels) => levels[rng.gen_range(0..levels.len())],
            };
            edges.push(Edge::new(i, j, p));
        }
    }
    InfluenceGraph::new(n, edges)
}

/// Random integer node weights in `1..=max_weight` on top of [`gen_random`].
pub fn gen_random_weighted(
    n: usize,
    p_edge: f64,
    max_weight: u32,
    seed: u64,
) -> Result<InfluenceGraph> {
    let g = gen_random(n, p_edge, 0.0, 1.0, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::GENERATOR, 1));
    let weights = (0..n).map(|_| rng.gen_range(1..=max_weight) as f64).collect();
    InfluenceGraph::with_weights(n, weights, g.edges().to_vec())
}

/// One instance of the verification corpus.
#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub index: usize,
    pub graph: InfluenceGraph,
    pub budget: Budget,
    pub n: usize,
    pub p_edge: f64,
    pub law: ProbabilityLaw,
}

pub const CORPUS_SIZES: [usize; 3] = [3, 4, 5];
pub const CORPUS_DENSITIES: [f64; 3] = [0.3, 0.6, 1.0];
pub const CORPUS_BUDGETS: [usize; 3] = [1, 2, 3];
pub const CORPUS_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// The tiny-graph corpus used by the verification suites. Instance `i`
/// cycles through every combination of size, density, probability law and
/// budget, with its own derived generator seed.
pub fn verify_corpus(size: usize, seed: u64) -> Result<Vec<CorpusInstance>> {
    let laws = [
        ProbabilityLaw::Levels(CORPUS_LEVELS.to_vec()),
        ProbabilityLaw::Uniform { low: 0.0, high: 1.0 },
    ];
    let combos: Vec<(usize, f64, &ProbabilityLaw, usize)> = itertools::iproduct!(
        CORPUS_SIZES,
        CORPUS_DENSITIES,
        laws.iter(),
        CORPUS_BUDGETS
    )
    .collect();
    (0..size)
        .map(|i| {
            let (n, p_edge, law, k) = combos[i % combos.len()];
            let graph = gen_random_with(n, p_edge, law, derive_seed(seed, stream::CORPUS, i as u64))?;
            let budget = Budget::new(k.min(n), n)?;
            Ok(CorpusInstance {
                index: i,
                graph,
                budget,
                n,
                p_edge,
                law: law.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bipartite_m2_counts() {
        let (g, k, meta) = gen_bipartite_gap(2).unwrap();
        assert_eq!(g.node_count(), 78);
        assert_eq!(g.edge_count(), 280);
        assert_eq!(k.k(), 4);
        assert!(g.edges().iter().all(|e| e.p == 0.5));
        for l in 0..70 {
            assert_eq!(g.out_degree(NodeId::new(l)), 4);
        }
        for r in 70..78 {
            assert_eq!(g.out_degree(NodeId::new(r)), 0);
        }
        assert_eq!(meta.subsets.unwrap()[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn bipartite_m3_is_refused() {
        assert!(gen_bipartite_gap(3).unwrap_err().is_resource_guard());
        assert!(matches!(gen_bipartite_gap(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bad_example_small() {
        let (g, k, meta) = gen_bad_example(2, 1.0).unwrap();
        assert_eq!(g.node_count(), 7);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(k.k(), 3);
        assert!((meta.budget_real.unwrap() - 2.0 * (E + 3.0) / (E + 1.0)).abs() < 1e-12);
        let e = g.edge(g.find_edge(NodeId(0), NodeId(1)).unwrap());
        assert_eq!(e.p, 0.5);
        let e = g.edge(g.find_edge(NodeId(1), NodeId(3)).unwrap());
        assert!((e.p - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn bad_example_d20_layout() {
        let (g, k, _) = gen_bad_example(20, 100.0).unwrap();
        assert_eq!(g.node_count(), 19 + 20 + 40);
        assert_eq!(g.weight(NodeId(39)), 100.0);
        assert_eq!(g.weight(NodeId(38)), 1.0);
        assert_eq!(k.k(), 31);
    }

    #[test]
    fn closed_form_facts() {
        let (m1, m2, _) = bad_example_marginals(50, 10.0, 0);
        assert!((m1 - m2 - 1.0).abs() < 1e-12);
        for d in [5, 20, 100] {
            for j in 0..d {
                let (m1, m2, m3) = bad_example_marginals(d, 30.0, j);
                assert!(m1 >= m3 && m1 > m2);
            }
            let (_, m2, m3) = bad_example_marginals(d, 30.0, d - 1);
            assert!(m2 >= m3);
        }
        let big = bad_example_closed_forms(1_000_000, 1e9);
        let per = big.greedy_closed_form / (1e6 * 1e9);
        assert!((per - 2.0 * limit_ratio()).abs() < 1e-4, "{per}");
    }

    #[test]
    fn g_of_w_shape() {
        let base = InfluenceGraph::new(1, vec![]).unwrap();
        let (g, _) = gen_g_of_w(&base, 1.0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(g.edge(0).p, 1.0);

        let base = gen_random(4, 0.5, 0.1, 0.9, 3).unwrap();
        let (g, _) = gen_g_of_w(&base, 7.0).unwrap();
        assert_eq!(g.node_count(), 8);
        assert_eq!(g.edge_count(), 4 + base.edge_count());
        assert_eq!(g.total_weight(), 4.0 + 28.0);
    }

    #[test]
    fn random_graphs() {
        assert_eq!(gen_random(5, 0.0, 0.0, 1.0, 1).unwrap().edge_count(), 0);
        assert_eq!(gen_random(3, 1.0, 0.0, 1.0, 1).unwrap().edge_count(), 6);
        assert_eq!(gen_random(6, 0.4, 0.2, 0.3, 9).unwrap(), gen_random(6, 0.4, 0.2, 0.3, 9).unwrap());
        let g = gen_random(6, 1.0, 0.2, 0.3, 9).unwrap();
        assert!(g.edges().iter().all(|e| (0.2..=0.3).contains(&e.p)));
    }

    #[test]
    fn corpus_covers_parameters() {
        let c = verify_corpus(200, 1).unwrap();
        assert_eq!(c.len(), 200);
        for n in CORPUS_SIZES {
            assert!(c.iter().any(|i| i.n == n && i.budget.k() == 3.min(n)));
        }
        assert!(c.iter().all(|i| i.budget.k() <= i.n));
    }

    #[test]
    fn metadata_round_trip() {
        let (_, _, meta) = gen_bad_example(3, 2.0).unwrap();
        let text = serde_json::to_string(&meta).unwrap();
        assert!(text.contains("\"construction\":\"bad-example\""));
        assert!(text.contains("\"params\":{\"d\":3,\"w\":2.0}"));
        let back: Metadata = serde_json::from_str(&text).unwrap();
        assert_eq!(back, meta);
    }
}
