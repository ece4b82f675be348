//! Greedy and adaptive greedy seed selection.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{Budget, InfluenceGraph, NodeId};
use crate::realization::PartialRealization;
use crate::rng::{derive_seed, stream};
use crate::spread::{marginals_adaptive, marginals_nonadaptive, EstimatorConfig, SpreadEstimate};

use super::{argmax_first, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyStep {
    pub node: NodeId,
    pub marginal: SpreadEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyResult {
    pub seeds: Vec<NodeId>,
    pub steps: Vec<GreedyStep>,
}

fn pick(candidates: &[NodeId], gains: &[SpreadEstimate]) -> Option<GreedyStep> {
    argmax_first(gains.iter().map(|g| g.value)).map(|i| GreedyStep {
        node: candidates[i],
        marginal: gains[i],
    })
}

/// Non-adaptive greedy: `k` rounds, each adding the node of largest
/// marginal gain, lowest id on ties. Monte Carlo rounds share one replicate
/// pool across candidates, drawn fresh per round.
pub fn greedy_nonadaptive(graph: &InfluenceGraph, k: Budget, cfg: &EstimatorConfig) -> Result<GreedyResult> {
    let mut seeds: Vec<NodeId> = Vec::with_capacity(k.k());
    let mut chosen = graph.empty_set();
    let mut steps = Vec::with_capacity(k.k());
    for round in 0..k.k() {
        let candidates: Vec<NodeId> = graph.nodes().filter(|v| !chosen.contains(v.index())).collect();
        let step_cfg = cfg.with_seed(derive_seed(cfg.base_seed, stream::GREEDY_STEP, round as u64));
        let gains = marginals_nonadaptive(graph, &seeds, &candidates, 1, &step_cfg)?;
        let Some(step) = pick(&candidates, &gains) else {
            break;
        };
        chosen.insert(step.node.index());
        seeds.push(step.node);
        steps.push(step);
    }
    Ok(GreedyResult { seeds, steps })
}

/// One adaptive greedy decision: the node outside `dom ψ` of largest
/// adaptive marginal gain, or `None` when every node is already selected.
pub fn greedy_adaptive_step(
    graph: &InfluenceGraph,
    psi: &PartialRealization,
    cfg: &EstimatorConfig,
) -> Result<Option<GreedyStep>> {
    let candidates: Vec<NodeId> = graph.nodes().filter(|&v| !psi.contains(v)).collect();
    let step_cfg = cfg.with_seed(derive_seed(cfg.base_seed, stream::ADAPTIVE_STEP, psi.len() as u64));
    let gains = marginals_adaptive(graph, psi, &candidates, 1, &step_cfg)?;
    Ok(pick(&candidates, &gains))
}

/// Adaptive greedy as a policy: always spends the full budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGreedy {
    pub budget: Budget,
    pub cfg: EstimatorConfig,
}

impl AdaptiveGreedy {
    pub fn new(budget: Budget, cfg: EstimatorConfig) -> Self {
        AdaptiveGreedy { budget, cfg }
    }
}

impl Policy for AdaptiveGreedy {
    fn budget(&self) -> usize {
        self.budget.k()
    }

    fn next_seed(&self, graph: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>> {
        if psi.len() >= self.budget.k() {
            return Ok(None);
        }
        Ok(greedy_adaptive_step(graph, psi, &self.cfg)?.map(|s| s.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::policy::run_adaptive;
    use crate::realization::Realization;

    fn ex() -> EstimatorConfig {
        EstimatorConfig::exact()
    }

    #[test]
    fn isolated_weighted_nodes() {
        let g = InfluenceGraph::with_weights(3, vec![5.0, 2.0, 1.0], vec![]).unwrap();
        let r = greedy_nonadaptive(&g, Budget::new(2, 3).unwrap(), &ex()).unwrap();
        assert_eq!(r.seeds, vec![NodeId(0), NodeId(1)]);
        assert_eq!(r.steps[0].marginal.value, 5.0);
        assert_eq!(r.steps[1].marginal.value, 2.0);
    }

    #[test]
    fn prefers_the_certain_edge() {
        let g = InfluenceGraph::new(3, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let r = greedy_nonadaptive(&g, Budget::new(1, 3).unwrap(), &ex()).unwrap();
        assert_eq!(r.seeds, vec![NodeId(0)]);
    }

    #[test]
    fn fills_budget_when_gains_vanish() {
        let g = InfluenceGraph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 1.0)]).unwrap();
        let r = greedy_nonadaptive(&g, Budget::new(3, 3).unwrap(), &ex()).unwrap();
        assert_eq!(r.seeds, vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(r.steps[2].marginal.value, 0.0);
    }

    #[test]
    fn first_adaptive_pick_matches_greedy() {
        let g = InfluenceGraph::new(
            4,
            vec![Edge::new(0, 1, 0.4), Edge::new(2, 3, 0.6), Edge::new(2, 1, 0.1)],
        )
        .unwrap();
        let psi = PartialRealization::empty(&g);
        let a = greedy_adaptive_step(&g, &psi, &ex()).unwrap().unwrap();
        let b = greedy_nonadaptive(&g, Budget::new(1, 4).unwrap(), &ex()).unwrap();
        assert_eq!(a.node, b.seeds[0]);
    }

    #[test]
    fn single_node_graph() {
        let g = InfluenceGraph::new(1, vec![]).unwrap();
        let pol = AdaptiveGreedy::new(Budget::new(1, 1).unwrap(), ex());
        let run = run_adaptive(&g, &pol, &Realization::all_live(&g)).unwrap();
        assert_eq!(run.seeds, vec![NodeId(0)]);
    }

    #[test]
    fn feedback_changes_the_second_pick() {
        // 0 -> 1 (0.5), 1 -> 2 (0.9), 3 isolated.
        let g = InfluenceGraph::new(4, vec![Edge::new(0, 1, 0.5), Edge::new(1, 2, 0.9)]).unwrap();
        let pol = AdaptiveGreedy::new(Budget::new(2, 4).unwrap(), ex());
        let live = run_adaptive(&g, &pol, &Realization::all_live(&g)).unwrap();
        let blocked = run_adaptive(&g, &pol, &Realization::all_blocked(&g)).unwrap();
        assert_eq!(live.seeds, vec![NodeId(0), NodeId(3)]);
        assert_eq!(blocked.seeds, vec![NodeId(0), NodeId(1)]);
    }
}
