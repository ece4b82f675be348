//! Exact optima over non-adaptive seed sets and adaptive policies.

use std::collections::HashMap;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Budget, InfluenceGraph, NodeId};
use crate::realization::PartialRealization;
use crate::spread::{self, EstimatorConfig};

use super::tree::{materialize_tree, outcomes, DecisionTree};
use super::{argmax_first, Policy, TREE_NODE_LIMIT};

/// Largest number of subsets examined by the non-adaptive search.
pub const SUBSET_LIMIT: u64 = 1_000_000;
/// Largest number of feedback states memoized by the adaptive search.
pub const STATE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Set(Vec<NodeId>),
    Tree(DecisionTree),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub value: f64,
    pub witness: Witness,
    pub exact: bool,
}

/// Best seed set of size `k` by exhaustive search (spread is monotone, so
/// smaller sets never do better). Lexicographically first on ties.
pub fn opt_nonadaptive(graph: &InfluenceGraph, k: Budget, cfg: &EstimatorConfig) -> Result<OptResult> {
    let n = graph.node_count();
    let count = (0..k.k() as u64).fold(1u128, |acc, i| acc * (n as u128 - i as u128) / (i as u128 + 1));
    if count > SUBSET_LIMIT as u128 {
        return Err(Error::TooLargeForExact {
            what: "candidate seed sets",
            size: count.min(u64::MAX as u128) as u64,
            limit: SUBSET_LIMIT,
        });
    }
    let exact = cfg.with_mode(spread::Mode::Exact);
    let sets: Vec<Vec<NodeId>> = graph.nodes().combinations(k.k()).collect();
    let values = sets
        .iter()
        .map(|s| spread::spread_exact(graph, s, &exact).map(|v| v.value))
        .collect::<Result<Vec<f64>>>()?;
    let best = argmax_first(values.iter().copied()).expect("at least one subset");
    Ok(OptResult {
        value: values[best],
        witness: Witness::Set(sets[best].clone()),
        exact: true,
    })
}

/// An adaptive policy given by an explicit table from feedback to action.
#[derive(Debug, Clone, Default)]
pub struct TablePolicy {
    pub budget: usize,
    pub table: HashMap<PartialRealization, NodeId>,
}

impl Policy for TablePolicy {
    fn budget(&self) -> usize {
        self.budget
    }

    fn next_seed(&self, _: &InfluenceGraph, psi: &PartialRealization) -> Result<Option<NodeId>> {
        Ok(self.table.get(psi).copied())
    }
}

struct Search<'a> {
    graph: &'a InfluenceGraph,
    k: usize,
    cfg: EstimatorConfig,
    memo: HashMap<PartialRealization, (f64, Option<NodeId>)>,
}

impl Search<'_> {
    fn value(&mut self, psi: &PartialRealization) -> Result<f64> {
        if let Some(&(v, _)) = self.memo.get(psi) {
            return Ok(v);
        }
        if self.memo.len() >= STATE_LIMIT {
            return Err(Error::TooLargeForExact {
                what: "adaptive feedback states",
                size: self.memo.len() as u64 + 1,
                limit: STATE_LIMIT as u64,
            });
        }
        let n = self.graph.node_count();
        let entry = if psi.len() >= self.k || psi.len() == n {
            let dom = psi.domain_nodes();
            let v = spread::conditional_spread_exact(self.graph, &dom, psi, &self.cfg)?.value;
            (v, None)
        } else {
            let candidates: Vec<NodeId> = self.graph.nodes().filter(|&u| !psi.contains(u)).collect();
            let mut values = Vec::with_capacity(candidates.len());
            for &u in &candidates {
                let mut v = 0.0;
                for (mask, p) in outcomes(self.graph, u)? {
                    v += p * self.value(&psi.with(self.graph, u, mask))?;
                }
                values.push(v);
            }
            let best = argmax_first(values.iter().copied()).expect("a candidate remains");
            (values[best], Some(candidates[best]))
        };
        self.memo.insert(psi.clone(), entry);
        Ok(entry.0)
    }
}

/// Optimal adaptive value by dynamic programming over reachable feedback
/// states, with an optimal decision tree as witness.
pub fn opt_adaptive(graph: &InfluenceGraph, k: Budget, cfg: &EstimatorConfig) -> Result<OptResult> {
    let (value, policy) = opt_adaptive_policy(graph, k, cfg)?;
    let tree = materialize_tree(graph, &policy, TREE_NODE_LIMIT)?;
    Ok(OptResult {
        value,
        witness: Witness::Tree(tree),
        exact: true,
    })
}

/// Optimal adaptive value and the optimal policy as a table.
pub fn opt_adaptive_policy(graph: &InfluenceGraph, k: Budget, cfg: &EstimatorConfig) -> Result<(f64, TablePolicy)> {
    let mut search = Search {
        graph,
        k: k.k(),
        cfg: cfg.with_mode(spread::Mode::Exact),
        memo: HashMap::new(),
    };
    let root = PartialRealization::empty(graph);
    let value = search.value(&root)?;
    let table = search
        .memo
        .into_iter()
        .filter_map(|(psi, (_, a))| a.map(|u| (psi, u)))
        .collect();
    Ok((
        value,
        TablePolicy {
            budget: k.k(),
            table,
        },
    ))
}
