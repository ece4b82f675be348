//! The hybrid quantities comparing adaptive marginals under three
//! realizations with non-adaptive marginals under two.
//!
//! With `S = dom ψ` and `S⁺ = S ∪ {u}`, copy 1 conditioned on `ψ`:
//!
//! * `a = E f(S⁺; S: Φ¹∪Φ²∪Φ³, u: Φ¹∪Φ², rest: Φ¹)`
//! * `b = E f(S;  S: Φ¹∪Φ²∪Φ³, rest: Φ¹)`
//! * `c = E f(S⁺; S: Φ¹∪Φ²∪Φ³, u: Φ¹∪Φ²∪Φ³, rest: Φ¹)`
//!
//! so `c − b = Δ_{f³}(u | ψ)`, and both `a − b` and `c − a` are bounded by
//! `Δ_{f²}(u | S)` (unconditioned).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::{compose, reachable_utility, ComposedRealization, PartialRealization, Realization};

use super::exact::{edge_prob, expected_reach, ExactLimits};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `Δ_{f²}(u | dom ψ)` without conditioning.
    pub delta2: f64,
}

impl HybridTerms {
    /// `Δ_{f³}(u | ψ)`.
    pub fn delta3_adaptive(&self) -> f64 {
        self.c - self.b
    }

    /// First intermediate difference, bounded by `delta2`.
    pub fn first_step(&self) -> f64 {
        self.a - self.b
    }

    /// Second intermediate difference, bounded by `delta2`.
    pub fn second_step(&self) -> f64 {
        self.c - self.a
    }
}

fn check(graph: &InfluenceGraph, psi: &PartialRealization, u: NodeId) -> Result<()> {
    graph.check_node(u)?;
    if psi.contains(u) {
        return Err(Error::InvalidArgument(format!("node {u} is already in dom(psi)")));
    }
    Ok(())
}

/// Exact terms through per-edge probability transforms.
pub fn hybrid_terms(
    graph: &InfluenceGraph,
    psi: &PartialRealization,
    u: NodeId,
    limits: ExactLimits,
) -> Result<HybridTerms> {
    check(graph, psi, u)?;
    let s = psi.domain_nodes();
    let mut s_plus = s.clone();
    s_plus.push(u);

    // copies: per node count of independent copies; psi fixes copy 1 when `cond`.
    let eval = |seeds: &[NodeId], s_copies: u32, u_copies: u32, cond: bool| {
        expected_reach(
            graph,
            seeds,
            |e| {
                let edge = graph.edge(e);
                let src = edge.src;
                let c = if src == u {
                    u_copies
                } else if psi.contains(src) {
                    s_copies
                } else {
                    1
                };
                let fixed = if cond { psi.edge_state(graph, e) } else { None };
                edge_prob(edge.p, c, fixed)
            },
            limits,
        )
    };
    let a = eval(&s_plus, 3, 2, true)?;
    let b = eval(&s, 3, 1, true)?;
    let c = eval(&s_plus, 3, 3, true)?;
    let delta2 = eval(&s_plus, 2, 2, false)? - eval(&s, 2, 1, false)?;
    Ok(HybridTerms { a, b, c, delta2 })
}

/// Default cap on enumerated edge states per route in the literal check.
pub const COMPOSITION_BIT_LIMIT: usize = 20;

/// The same terms by enumerating `Φ¹, Φ², Φ³` and composing them literally.
/// Refuses when either enumeration needs more than `bit_limit` bits.
pub fn hybrid_terms_by_composition(
    graph: &InfluenceGraph,
    psi: &PartialRealization,
    u: NodeId,
    bit_limit: usize,
) -> Result<HybridTerms> {
    check(graph, psi, u)?;
    let s = psi.domain_nodes();
    let mut s_plus = s.clone();
    s_plus.push(u);
    let m = graph.edge_count();
    let random = |e: usize| {
        let p = graph.edge(e).p;
        p > 0.0 && p < 1.0
    };
    let out_of = |set: &[NodeId]| -> Vec<usize> {
        set.iter()
            .flat_map(|&v| graph.out_edges(v))
            .filter(|&e| random(e))
            .collect()
    };

    // Slots: (copy index, edge).
    let conditioned_slots: Vec<(usize, usize)> = (0..m)
        .filter(|&e| random(e) && psi.edge_state(graph, e).is_none())
        .map(|e| (0, e))
        .chain(out_of(&s_plus).into_iter().flat_map(|e| [(1, e), (2, e)]))
        .collect();
    let free_slots: Vec<(usize, usize)> = (0..m)
        .filter(|&e| random(e))
        .map(|e| (0, e))
        .chain(out_of(&s_plus).into_iter().map(|e| (1, e)))
        .collect();
    for slots in [&conditioned_slots, &free_slots] {
        if slots.len() > bit_limit {
            return Err(Error::TooLargeForExact {
                what: "enumerated realization bits",
                size: slots.len() as u64,
                limit: bit_limit as u64,
            });
        }
    }

    let base = |copy: usize, cond: bool| {
        let mut r = Realization::all_blocked(graph);
        for e in 0..m {
            let p = graph.edge(e).p;
            let fixed = if cond && copy == 0 {
                psi.edge_state(graph, e)
            } else {
                None
            };
            r.set(e, fixed.unwrap_or(p >= 1.0));
        }
        r
    };
    let selectors = |s_mask: u32, u_mask: u32, arity: usize| {
        let mut c = ComposedRealization::uniform(graph, arity, 1);
        for &v in &s {
            c.select(v, s_mask);
        }
        c.select(u, u_mask);
        c
    };

    let sel_a = selectors(0b111, 0b011, 3);
    let sel_b = selectors(0b111, 0b001, 3);
    let sel_c = selectors(0b111, 0b111, 3);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    let fixed3 = [base(0, true), base(1, true), base(2, true)];
    for mask in 0u64..(1u64 << conditioned_slots.len()) {
        let mut phis = fixed3.clone();
        let mut pr = 1.0;
        for (i, &(copy, e)) in conditioned_slots.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            let p = graph.edge(e).p;
            pr *= if on { p } else { 1.0 - p };
            phis[copy].set(e, on);
        }
        a += pr * reachable_utility(graph, &s_plus, &compose(graph, &sel_a, &phis)?);
        b += pr * reachable_utility(graph, &s, &compose(graph, &sel_b, &phis)?);
        c += pr * reachable_utility(graph, &s_plus, &compose(graph, &sel_c, &phis)?);
    }

    let sel_plus = selectors(0b11, 0b11, 2);
    let sel_base = selectors(0b11, 0b01, 2);
    let fixed2 = [base(0, false), base(1, false)];
    let mut delta2 = 0.0;
    for mask in 0u64..(1u64 << free_slots.len()) {
        let mut phis = fixed2.clone();
        let mut pr = 1.0;
        for (i, &(copy, e)) in free_slots.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            let p = graph.edge(e).p;
            pr *= if on { p } else { 1.0 - p };
            phis[copy].set(e, on);
        }
        delta2 += pr
            * (reachable_utility(graph, &s_plus, &compose(graph, &sel_plus, &phis)?)
                - reachable_utility(graph, &s, &compose(graph, &sel_base, &phis)?));
    }
    Ok(HybridTerms { a, b, c, delta2 })
}
