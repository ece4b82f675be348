//! Decision trees of adaptive policies and the random-walk non-adaptive
//! policy extracted from them.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::realization::PartialRealization;
use crate::spread::{self, EstimatorConfig};

use super::{check_choice, Policy};

/// Every feedback outcome of seeding `u` as (out-edge block mask, probability).
/// Edges with probability 0 or 1 do not branch.
pub fn outcomes(graph: &InfluenceGraph, u: NodeId) -> Result<Vec<(u64, f64)>> {
    let block = graph.out_edges(u);
    if block.len() > 64 {
        return Err(Error::TreeTooLarge { limit: 64 });
    }
    let mut fixed = 0u64;
    let mut random = Vec::new();
    for (i, e) in block.enumerate() {
        let p = graph.edge(e).p;
        if p >= 1.0 {
            fixed |= 1 << i;
        } else if p > 0.0 {
            random.push((i, p));
        }
    }
    if random.len() > 24 {
        return Err(Error::TreeTooLarge { limit: 1 << 24 });
    }
    let mut out = Vec::with_capacity(1 << random.len());
    for bits in 0u64..(1u64 << random.len()) {
        let mut mask = fixed;
        let mut pr = 1.0;
        for (j, &(i, p)) in random.iter().enumerate() {
            if bits >> j & 1 == 1 {
                mask |= 1 << i;
                pr *= p;
            } else {
                pr *= 1.0 - p;
            }
        }
        out.push((mask, pr));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub psi: PartialRealization,
    /// Probability that the policy produces `psi`.
    pub prob: f64,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Seed chosen at this node; `None` at leaves.
    pub action: Option<NodeId>,
    /// (feedback mask over the action's out-edge block, child index).
    pub children: Vec<(u64, usize)>,
}

/// Explicit decision tree; node 0 is the root (empty feedback).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

/// Expands `policy` into its decision tree, refusing beyond `limit` nodes.
pub fn materialize_tree<P>(graph: &InfluenceGraph, policy: &P, limit: usize) -> Result<DecisionTree>
where
    P: Policy + ?Sized,
{
    let mut nodes = vec![TreeNode {
        psi: PartialRealization::empty(graph),
        prob: 1.0,
        depth: 0,
        parent: None,
        action: None,
        children: Vec::new(),
    }];
    let mut i = 0;
    while i < nodes.len() {
        let action = policy.next_seed(graph, &nodes[i].psi)?;
        if let Some(u) = action {
            check_choice(graph, &nodes[i].psi, policy.budget(), u)?;
            let branches = outcomes(graph, u)?;
            if nodes.len() + branches.len() > limit {
                return Err(Error::TreeTooLarge { limit });
            }
            nodes[i].action = Some(u);
            for (mask, pr) in branches {
                let child = TreeNode {
                    psi: nodes[i].psi.with(graph, u, mask),
                    prob: nodes[i].prob * pr,
                    depth: nodes[i].depth + 1,
                    parent: Some(i),
                    action: None,
                    children: Vec::new(),
                };
                let idx = nodes.len();
                nodes.push(child);
                nodes[i].children.push((mask, idx));
            }
        }
        i += 1;
    }
    Ok(DecisionTree { nodes })
}

impl DecisionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.action.is_none())
    }

    pub fn internal(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.action.is_some())
    }

    pub fn leaf_mass(&self) -> f64 {
        self.leaves().map(|l| l.prob).sum()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// `σ^t(π) = Σ_leaves p_ℓ · E[f^t(dom ψ_ℓ) | Φ¹ ∼ ψ_ℓ]`.
    pub fn aggregate_value(&self, graph: &InfluenceGraph, t: usize, cfg: &EstimatorConfig) -> Result<f64> {
        let mut total = 0.0;
        for leaf in self.leaves() {
            let dom = leaf.psi.domain_nodes();
            let v = spread::conditional_aggregate_spread(graph, &dom, Some(&leaf.psi), t, cfg)?;
            total += leaf.prob * v.value;
        }
        Ok(total)
    }

    /// `Σ_s p_s Δ_{f^t}(π(ψ_s) | ψ_s)` over internal nodes.
    pub fn adaptive_marginal_sum(&self, graph: &InfluenceGraph, t: usize, cfg: &EstimatorConfig) -> Result<f64> {
        let mut total = 0.0;
        for node in self.internal() {
            let u = node.action.expect("internal nodes act");
            total += node.prob * spread::marginal_adaptive(graph, u, &node.psi, t, cfg)?.value;
        }
        Ok(total)
    }

    /// `Σ_s p_s Δ_{f^t}(π(ψ_s) | dom ψ_s)` over internal nodes.
    pub fn nonadaptive_marginal_sum(&self, graph: &InfluenceGraph, t: usize, cfg: &EstimatorConfig) -> Result<f64> {
        let mut total = 0.0;
        for node in self.internal() {
            let u = node.action.expect("internal nodes act");
            let dom = node.psi.domain_nodes();
            total += node.prob * spread::marginal_nonadaptive(graph, u, &dom, t, cfg)?.value;
        }
        Ok(total)
    }
}

#[derive(Serialize)]
struct NodeView {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    domain: Vec<NodeId>,
    feedback: String,
    prob: f64,
    action: Option<NodeId>,
    children: Vec<ChildView>,
}

#[derive(Serialize)]
struct ChildView {
    outcome: String,
    node: usize,
}

impl Serialize for DecisionTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.nodes.len()))?;
        for (id, n) in self.nodes.iter().enumerate() {
            seq.serialize_element(&NodeView {
                id,
                parent: n.parent,
                depth: n.depth,
                domain: n.psi.domain_nodes(),
                feedback: n.psi.live_hex(),
                prob: n.prob,
                action: n.action,
                children: n
                    .children
                    .iter()
                    .map(|&(mask, node)| ChildView {
                        outcome: format!("{mask:x}"),
                        node,
                    })
                    .collect(),
            })?;
        }
        seq.end()
    }
}

/// Mixture over seed sets: with probability `p` commit to `set`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomSeedSetPolicy {
    pub entries: Vec<(Vec<NodeId>, f64)>,
}

impl RandomSeedSetPolicy {
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// `σ^t(W) = Σ p · σ^t(set)`.
    pub fn aggregate_value(&self, graph: &InfluenceGraph, t: usize, cfg: &EstimatorConfig) -> Result<f64> {
        let mut total = 0.0;
        for (set, p) in &self.entries {
            total += p * spread::aggregate_spread_set(graph, set, t, cfg)?.value;
        }
        Ok(total)
    }
}

/// `W(π)`: one entry per leaf, selecting `dom ψ_ℓ` with probability `p_ℓ`.
pub fn random_walk_policy(tree: &DecisionTree) -> RandomSeedSetPolicy {
    RandomSeedSetPolicy {
        entries: tree
            .leaves()
            .map(|l| (l.psi.domain_nodes(), l.prob))
            .collect(),
    }
}
