//! Spread quantities: `σ(S)`, the aggregate spread `σ^t(S)`, spreads
//! conditioned on feedback, and the marginal gains built from them.
//!
//! Every function has an exact route (see [`exact`]) and a Monte Carlo route
//! (see [`mc`]); [`Mode::Auto`] takes the exact route unless it is refused by
//! the size guard.

pub mod exact;
pub mod hybrid;
pub mod mc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::PartialRealization;

pub use exact::ExactLimits;
pub use hybrid::{hybrid_terms, hybrid_terms_by_composition, HybridTerms, COMPOSITION_BIT_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub value: f64,
    pub exact: bool,
    pub stderr: f64,
    pub replicates: u64,
}

impl SpreadEstimate {
    pub fn exact(value: f64) -> Self {
        SpreadEstimate {
            value,
            exact: true,
            stderr: 0.0,
            replicates: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: Mode,
    pub replicates: u64,
    pub base_seed: u64,
    pub exact_edge_limit: usize,
    pub exact_node_limit: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            mode: Mode::Auto,
            replicates: 10_000,
            base_seed: 0,
            exact_edge_limit: 22,
            exact_node_limit: 12,
        }
    }
}

impl EstimatorConfig {
    pub fn exact() -> Self {
        EstimatorConfig {
            mode: Mode::Exact,
            ..Default::default()
        }
    }

    pub fn monte_carlo(replicates: u64, base_seed: u64) -> Self {
        EstimatorConfig {
            mode: Mode::MonteCarlo,
            replicates,
            base_seed,
            ..Default::default()
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn limits(&self) -> ExactLimits {
        ExactLimits {
            edge_limit: self.exact_edge_limit,
            node_limit: self.exact_node_limit,
        }
    }

    fn check_mc(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "Monte Carlo estimation needs at least one replicate".into(),
            ));
        }
        Ok(())
    }
}

fn check_nodes(graph: &InfluenceGraph, nodes: &[NodeId]) -> Result<()> {
    nodes.iter().try_for_each(|&v| graph.check_node(v))
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    Ok(())
}

fn dispatch<E, M>(cfg: &EstimatorConfig, exact: E, mc: M) -> Result<SpreadEstimate>
where
    E: FnOnce() -> Result<f64>,
    M: FnOnce() -> Result<SpreadEstimate>,
{
    match cfg.mode {
        Mode::Exact => exact().map(SpreadEstimate::exact),
        Mode::MonteCarlo => mc(),
        Mode::Auto => match exact() {
            Ok(v) => Ok(SpreadEstimate::exact(v)),
            Err(e) if e.is_resource_guard() => mc(),
            Err(e) => Err(e),
        },
    }
}

/// Copy counts per node: `t` on `set` (and `extra`), 1 elsewhere.
fn copy_counts(graph: &InfluenceGraph, set: &[NodeId], extra: Option<NodeId>, t: usize) -> Vec<u32> {
    let mut copies = vec![1u32; graph.node_count()];
    for v in set.iter().chain(extra.iter()) {
        copies[v.index()] = t as u32;
    }
    copies
}

/// Exact `E[f^t(set, Φ¹..Φ^t) | Φ¹ ∼ ψ]`.
pub(crate) fn exact_aggregate(
    graph: &InfluenceGraph,
    set: &[NodeId],
    extra: Option<NodeId>,
    psi: Option<&PartialRealization>,
    t: usize,
    limits: ExactLimits,
) -> Result<f64> {
    let copies = copy_counts(graph, set, extra, t);
    let mut seeds = set.to_vec();
    seeds.extend(extra);
    exact::expected_reach(graph, &seeds, exact::query_probs(graph, &copies, psi), limits)
}

fn mc_aggregate(
    graph: &InfluenceGraph,
    set: &[NodeId],
    psi: Option<&PartialRealization>,
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    cfg.check_mc()?;
    if set.is_empty() {
        return Ok(SpreadEstimate::exact(0.0));
    }
    let plan = mc::CopyPlan::new(graph, set, t, psi);
    let acc = mc::run(graph.node_count(), cfg.replicates, 1, |i, sc, out| {
        sc.load(cfg.base_seed, i, t);
        let mc::Scratch {
            reacher,
            copy_seeds,
        } = sc;
        out[0] = reacher.expand(graph, set.iter().copied(), |e| plan.live(e, None, copy_seeds));
    });
    Ok(acc[0].estimate())
}

/// `σ(S)` by exact evaluation.
pub fn spread_exact(graph: &InfluenceGraph, set: &[NodeId], cfg: &EstimatorConfig) -> Result<SpreadEstimate> {
    check_nodes(graph, set)?;
    exact_aggregate(graph, set, None, None, 1, cfg.limits()).map(SpreadEstimate::exact)
}

/// `σ(S)` by Monte Carlo with `cfg.replicates` replicates.
pub fn spread_mc(graph: &InfluenceGraph, set: &[NodeId], cfg: &EstimatorConfig) -> Result<SpreadEstimate> {
    check_nodes(graph, set)?;
    mc_aggregate(graph, set, None, 1, cfg)
}

/// `σ(S)` in the configured mode.
pub fn spread(graph: &InfluenceGraph, set: &[NodeId], cfg: &EstimatorConfig) -> Result<SpreadEstimate> {
    conditional_aggregate_spread(graph, set, None, 1, cfg)
}

/// `σ^t(S)`: seeds take the union of `t` independent realizations.
pub fn aggregate_spread_set(
    graph: &InfluenceGraph,
    set: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    conditional_aggregate_spread(graph, set, None, t, cfg)
}

/// `E[f(S, Φ) | Φ ∼ ψ]`, exactly.
pub fn conditional_spread_exact(
    graph: &InfluenceGraph,
    set: &[NodeId],
    psi: &PartialRealization,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    check_nodes(graph, set)?;
    exact_aggregate(graph, set, None, Some(psi), 1, cfg.limits()).map(SpreadEstimate::exact)
}

/// `E[f^t(S, Φ¹..Φ^t) | Φ¹ ∼ ψ]` in the configured mode.
pub fn conditional_aggregate_spread(
    graph: &InfluenceGraph,
    set: &[NodeId],
    psi: Option<&PartialRealization>,
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    check_nodes(graph, set)?;
    check_t(t)?;
    dispatch(
        cfg,
        || exact_aggregate(graph, set, None, psi, t, cfg.limits()),
        || mc_aggregate(graph, set, psi, t, cfg),
    )
}

/// `Δ_{f^t}(u | S)`.
pub fn marginal_nonadaptive(
    graph: &InfluenceGraph,
    u: NodeId,
    set: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    Ok(marginals(graph, set, None, &[u], t, cfg)?[0])
}

/// `Δ_{f^t}(u | ψ)`: copy 1 is conditioned on `ψ` and the base set is `dom ψ`.
pub fn marginal_adaptive(
    graph: &InfluenceGraph,
    u: NodeId,
    psi: &PartialRealization,
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<SpreadEstimate> {
    Ok(marginals(graph, &psi.domain_nodes(), Some(psi), &[u], t, cfg)?[0])
}

/// `Δ_{f^t}(u | S)` for every candidate, sharing one pool of replicates.
pub fn marginals_nonadaptive(
    graph: &InfluenceGraph,
    set: &[NodeId],
    candidates: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<SpreadEstimate>> {
    marginals(graph, set, None, candidates, t, cfg)
}

/// `Δ_{f^t}(u | ψ)` for every candidate, sharing one pool of replicates.
pub fn marginals_adaptive(
    graph: &InfluenceGraph,
    psi: &PartialRealization,
    candidates: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<SpreadEstimate>> {
    marginals(graph, &psi.domain_nodes(), Some(psi), candidates, t, cfg)
}

/// Exact marginals within this distance below zero are rounding noise.
const CLAMP: f64 = 1e-9;

fn marginals(
    graph: &InfluenceGraph,
    set: &[NodeId],
    psi: Option<&PartialRealization>,
    candidates: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<SpreadEstimate>> {
    check_nodes(graph, set)?;
    check_nodes(graph, candidates)?;
    check_t(t)?;
    let in_set = graph.node_set(set)?;
    if let Some(u) = candidates.iter().find(|u| in_set.contains(u.index())) {
        return Err(Error::InvalidArgument(format!(
            "candidate {u} is already in the conditioning set"
        )));
    }
    let exact = || -> Result<Vec<SpreadEstimate>> {
        let limits = cfg.limits();
        let base = exact_aggregate(graph, set, None, psi, t, limits)?;
        candidates
            .par_iter()
            .map(|&u| {
                let with = exact_aggregate(graph, set, Some(u), psi, t, limits)?;
                let d = with - base;
                let d = if d < 0.0 && d > -CLAMP { 0.0 } else { d };
                Ok(SpreadEstimate::exact(d))
            })
            .collect()
    };
    match cfg.mode {
        Mode::Exact => exact(),
        Mode::MonteCarlo => mc_marginals(graph, set, psi, candidates, t, cfg),
        Mode::Auto => match exact() {
            Err(e) if e.is_resource_guard() => mc_marginals(graph, set, psi, candidates, t, cfg),
            other => other,
        },
    }
}

fn mc_marginals(
    graph: &InfluenceGraph,
    set: &[NodeId],
    psi: Option<&PartialRealization>,
    candidates: &[NodeId],
    t: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<SpreadEstimate>> {
    cfg.check_mc()?;
    let plan = mc::CopyPlan::new(graph, set, t, psi);
    let acc = mc::run(graph.node_count(), cfg.replicates, candidates.len(), |i, sc, out| {
        sc.load(cfg.base_seed, i, t);
        let mc::Scratch {
            reacher,
            copy_seeds,
        } = sc;
        reacher.expand(graph, set.iter().copied(), |e| plan.live(e, None, copy_seeds));
        for (slot, &u) in out.iter_mut().zip(candidates) {
            reacher.begin_trail();
            *slot = reacher.expand(graph, [u], |e| plan.live(e, Some(u.index()), copy_seeds));
            reacher.rollback();
        }
    });
    Ok(acc.iter().map(|m| m.estimate()).collect())
}
