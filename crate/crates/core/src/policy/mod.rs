//! Adaptive policies and their execution under myopic feedback.
//!
//! A [`Policy`] maps the feedback gathered so far to the next seed (or a stop).
//! [`run_adaptive`] executes a policy against one hidden realization, and
//! [`policy_spread`] evaluates `σ(π)` and the aggregate `σ^t(π)`, where the
//! policy runs on the first realization only and the chosen seeds are then
//! scored with `t` independent copies.

pub mod greedy;
pub mod opt;
pub mod special;
pub mod tree;

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::{LiveEdges, PartialRealization};
use crate::rng::edge_coin;
use crate::spread::{self, mc, EstimatorConfig, Mode, SpreadEstimate};

pub use greedy::{greedy_adaptive_step, greedy_nonadaptive, AdaptiveGreedy, GreedyResult, GreedyStep};
pub use opt::{opt_adaptive, opt_nonadaptive, OptResult, TablePolicy, Witness};
pub use special::{BadExampleReference, BipartiteGapPolicy};
pub use tree::{materialize_tree, random_walk_policy, DecisionTree, RandomSeedSetPolicy};

pub trait Policy: Sync {
    /// Largest number of seeds the policy may select.
    fn budget(&self) -> usize;

    /// Next seed given the feedback `psi`, or `None` to stop.
    fn next_seed(&self, graph: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>>;
}

/// Policy that always selects the same set, in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSetPolicy {
    seeds: Vec<NodeId>,
}

impl FixedSetPolicy {
    pub fn new(seeds: Vec<NodeId>) -> Self {
        FixedSetPolicy { seeds }
    }
}

impl Policy for FixedSetPolicy {
    fn budget(&self) -> usize {
        self.seeds.len()
    }

    fn next_seed(&self, _: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>> {
        Ok(self.seeds.iter().copied().find(|&v| !psi.contains(v)))
    }
}

/// Seeds in selection order and the feedback collected.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub seeds: Vec<NodeId>,
    pub feedback: PartialRealization,
}

/// Validates a proposed seed against the invariants every execution enforces.
pub(crate) fn check_choice(
    graph: &InfluenceGraph,
    psi: &PartialRealization,
    budget: usize,
    u: NodeId,
) -> Result<()> {
    graph.check_node(u)?;
    if psi.contains(u) {
        return Err(Error::PolicyRepeatsSeed { node: u });
    }
    if psi.len() >= budget {
        return Err(Error::PolicyViolatesBudget { budget });
    }
    Ok(())
}

/// Runs `policy` against the hidden realization `hidden`: each chosen seed
/// reveals the states of its own out-edges.
pub fn run_adaptive<P, L>(graph: &InfluenceGraph, policy: &P, hidden: &L) -> Result<Execution>
where
    P: Policy + ?Sized,
    L: LiveEdges + ?Sized,
{
    let mut psi = PartialRealization::empty(graph);
    let mut seeds = Vec::new();
    while let Some(u) = policy.next_seed(graph, &psi)? {
        check_choice(graph, &psi, policy.budget(), u)?;
        seeds.push(u);
        psi.observe(graph, u, &|e| hidden.is_live(e));
    }
    Ok(Execution {
        seeds,
        feedback: psi,
    })
}

/// Nodes materialized at most by exact policy evaluation.
pub const TREE_NODE_LIMIT: usize = 2_000_000;

/// `σ^t(π)` (`σ(π)` for `t = 1`).
pub fn policy_spread<P>(graph: &InfluenceGraph, policy: &P, t: usize, cfg: &EstimatorConfig) -> Result<SpreadEstimate>
where
    P: Policy + ?Sized,
{
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let exact = || -> Result<f64> {
        let tree = materialize_tree(graph, policy, TREE_NODE_LIMIT)?;
        tree.aggregate_value(graph, t, &cfg.with_mode(Mode::Exact))
    };
    match cfg.mode {
        Mode::Exact => exact().map(SpreadEstimate::exact),
        Mode::MonteCarlo => policy_spread_mc(graph, policy, t, cfg),
        Mode::Auto => match exact() {
            Ok(v) => Ok(SpreadEstimate::exact(v)),
            Err(e) if e.is_resource_guard() => policy_spread_mc(graph, policy, t, cfg),
            Err(e) => Err(e),
        },
    }
}

/// Monte Carlo `σ^t(π)`: replicate `i` runs the policy against copy 1 of
/// its realizations and scores the seeds with all `t` copies.
pub fn policy_spread_mc<P>(graph: &InfluenceGraph, policy: &P, t: usize, cfg: &EstimatorConfig) -> Result<SpreadEstimate>
where
    P: Policy + ?Sized,
{
    if cfg.replicates == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo estimation needs at least one replicate".into(),
        ));
    }
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let acc = mc::run(graph.node_count(), cfg.replicates, 1, |i, sc, out| {
        sc.load(cfg.base_seed, i, t);
        let mc::Scratch {
            reacher,
            copy_seeds,
        } = sc;
        let first = copy_seeds[0];
        let hidden = |e: usize| edge_coin(first, e) < graph.edge(e).p;
        match run_adaptive(graph, policy, &hidden) {
            Ok(run) => {
                let psi = &run.feedback;
                out[0] = reacher.expand(graph, run.seeds.iter().copied(), |e| {
                    let copies = if psi.contains(graph.edge(e).src) { t } else { 1 };
                    mc::live_in_copies(graph, e, copies, None, copy_seeds)
                });
            }
            Err(err) => {
                let mut slot = failure.lock().expect("no panics while holding the lock");
                slot.get_or_insert(err);
            }
        }
    });
    if let Some(err) = failure.into_inner().expect("lock is not poisoned") {
        return Err(err);
    }
    Ok(acc[0].estimate())
}

/// `σ^t` of a fixed set; convenience re-export for policy comparisons.
pub fn set_spread(graph: &InfluenceGraph, set: &[NodeId], t: usize, cfg: &EstimatorConfig) -> Result<SpreadEstimate> {
    spread::aggregate_spread_set(graph, set, t, cfg)
}

/// Index of the best value; ties (within a relative `1e-9`) go to the first.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v > b + 1e-9 * (1.0 + b.abs()) => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}
