//! Corpus-wide checks of the inequalities and identities, all in exact
//! arithmetic. A check's margin is its distance from failing: for `x ≤ y`
//! it is `y − x`, for an identity it is `1e-9 − |x − y|`.

use im_lab_core::constructions::{gen_g_of_w, gen_random_weighted, verify_corpus, CorpusInstance};
use im_lab_core::policy::tree::outcomes;
use im_lab_core::policy::{
    greedy_nonadaptive, materialize_tree, opt_adaptive, opt_nonadaptive, policy_spread, random_walk_policy,
    AdaptiveGreedy, Witness, TREE_NODE_LIMIT,
};
use im_lab_core::rng::{derive_seed, stream};
use im_lab_core::spread::{
    aggregate_spread_set, hybrid_terms, hybrid_terms_by_composition, spread_exact, HybridTerms,
};
use im_lab_core::{EstimatorConfig, InfluenceGraph, NodeId, PartialRealization};
use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::Body;
use crate::args::{Suite, VerifyArgs};
use crate::report::Verdict;
use crate::{CliError, CliResult};

/// Rounding slack for inequalities between exact values.
const SLACK: f64 = 1e-9;
/// Tolerance for identities.
const IDENTITY: f64 = 1e-9;
/// Largest corpus the suites accept.
pub const CORPUS_LIMIT: usize = 100_000;
/// Bit budget for the literal three-realization composition in the hybrid suite.
const LITERAL_BITS: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub checks: u64,
    pub violations: u64,
    /// Smallest margin seen; `null` when nothing was checked.
    pub min_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceMargins {
    pub index: usize,
    pub n: usize,
    pub edges: usize,
    pub k: usize,
    pub checks: u64,
    pub min_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub checks: Vec<CheckSummary>,
    pub instances: Vec<InstanceMargins>,
}

impl SuiteOutcome {
    pub fn violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.checks
            .iter()
            .map(|c| {
                let name = format!("{}/{}", self.suite, c.name);
                if c.checks == 0 {
                    Verdict::skipped(name, "no applicable cases")
                } else {
                    Verdict::check(
                        name,
                        c.violations == 0,
                        c.min_margin,
                        format!("{} violations in {} checks", c.violations, c.checks),
                    )
                }
            })
            .collect()
    }
}

/// Per-check counters for one instance.
struct Tally {
    names: &'static [&'static str],
    checks: Vec<u64>,
    violations: Vec<u64>,
    min: Vec<Option<f64>>,
}

impl Tally {
    fn new(names: &'static [&'static str]) -> Self {
        Tally {
            names,
            checks: vec![0; names.len()],
            violations: vec![0; names.len()],
            min: vec![None; names.len()],
        }
    }

    fn record(&mut self, check: usize, margin: f64, slack: f64) {
        self.checks[check] += 1;
        if !(margin >= -slack) {
            self.violations[check] += 1;
        }
        let m = &mut self.min[check];
        *m = Some(m.map_or(margin, |x: f64| x.min(margin)));
    }

    /// `lhs ≤ rhs`.
    fn le(&mut self, check: usize, lhs: f64, rhs: f64) {
        self.record(check, rhs - lhs, SLACK);
    }

    fn identity(&mut self, check: usize, a: f64, b: f64) {
        self.record(check, IDENTITY - (a - b).abs(), 0.0);
    }

    fn merge(&mut self, other: &Tally) {
        for i in 0..self.names.len() {
            self.checks[i] += other.checks[i];
            self.violations[i] += other.violations[i];
            self.min[i] = match (self.min[i], other.min[i]) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }

    fn total_checks(&self) -> u64 {
        self.checks.iter().sum()
    }

    fn min_margin(&self) -> Option<f64> {
        self.min.iter().flatten().copied().reduce(f64::min)
    }
}

fn ex() -> EstimatorConfig {
    EstimatorConfig::exact()
}

fn ids(v: &[usize]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId::new(i)).collect()
}

const AGGREGATION: &[&str] = &["aggregate_t2_le_2_spread", "aggregate_t3_le_3_spread"];

fn aggregation(inst: &CorpusInstance) -> CliResult<Tally> {
    let g = &inst.graph;
    let mut tally = Tally::new(AGGREGATION);
    for size in 1..=3.min(inst.n) {
        for set in (0..inst.n).combinations(size) {
            let set = ids(&set);
            let s1 = spread_exact(g, &set, &ex())?.value;
            for (i, t) in [2usize, 3].into_iter().enumerate() {
                let st = aggregate_spread_set(g, &set, t, &ex())?.value;
                tally.le(i, st, t as f64 * s1);
            }
        }
    }
    Ok(tally)
}

const HYBRID: &[&str] = &[
    "delta3_adaptive_le_2_delta2",
    "first_step_le_delta2",
    "second_step_le_delta2",
    "literal_composition_agrees",
];

/// Every partial realization reachable by some policy within `depth` seeds.
fn reachable_states(g: &InfluenceGraph, depth: usize) -> CliResult<Vec<PartialRealization>> {
    let mut all = vec![PartialRealization::empty(g)];
    let mut frontier = all.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for psi in &frontier {
            let last = psi.domain().ones().next_back();
            for u in g.nodes().filter(|u| last.is_none_or(|l| u.index() > l)) {
                for (mask, p) in outcomes(g, u)? {
                    if p > 0.0 {
                        next.push(psi.with(g, u, mask));
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(all)
}

fn hybrid(inst: &CorpusInstance) -> CliResult<Tally> {
    let g = &inst.graph;
    let mut tally = Tally::new(HYBRID);
    for psi in reachable_states(g, 2.min(inst.n - 1))? {
        for u in g.nodes().filter(|&u| !psi.contains(u)) {
            let x: HybridTerms = hybrid_terms(g, &psi, u, ex().limits())?;
            tally.le(0, x.delta3_adaptive(), 2.0 * x.delta2);
            tally.le(1, x.first_step(), x.delta2);
            tally.le(2, x.second_step(), x.delta2);
            match hybrid_terms_by_composition(g, &psi, u, LITERAL_BITS) {
                Ok(y) => {
                    let worst = [(x.a, y.a), (x.b, y.b), (x.c, y.c), (x.delta2, y.delta2)]
                        .iter()
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0, f64::max);
                    tally.record(3, IDENTITY - worst, 0.0);
                }
                Err(e) if e.is_resource_guard() => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(tally)
}

const TELESCOPING: &[&str] = &["adaptive_marginals_sum_to_policy_value", "nonadaptive_marginals_sum_to_walk_value"];

fn telescoping(inst: &CorpusInstance) -> CliResult<Tally> {
    let g = &inst.graph;
    let mut tally = Tally::new(TELESCOPING);
    let tree = materialize_tree(g, &AdaptiveGreedy::new(inst.budget, ex()), TREE_NODE_LIMIT)?;
    let walk = random_walk_policy(&tree);
    for t in 1..=3 {
        tally.identity(0, tree.aggregate_value(g, t, &ex())?, tree.adaptive_marginal_sum(g, t, &ex())?);
        tally.identity(1, walk.aggregate_value(g, t, &ex())?, tree.nonadaptive_marginal_sum(g, t, &ex())?);
    }
    Ok(tally)
}

const GAP: &[&str] = &[
    "ratio_at_least_one",
    "ratio_at_most_four",
    "adaptive_le_hybrid",
    "hybrid_le_2_walk2",
    "walk2_le_2_walk",
];

fn gap(inst: &CorpusInstance) -> CliResult<Tally> {
    let g = &inst.graph;
    let mut tally = Tally::new(GAP);
    let n = opt_nonadaptive(g, inst.budget, &ex())?.value;
    let a = opt_adaptive(g, inst.budget, &ex())?;
    let Witness::Tree(tree) = &a.witness else {
        unreachable!("adaptive optimum carries a tree");
    };
    let ratio = a.value / n;
    tally.le(0, 1.0, ratio);
    tally.le(1, ratio, 4.0);
    let walk = random_walk_policy(tree);
    let s1 = tree.aggregate_value(g, 1, &ex())?;
    let s3 = tree.aggregate_value(g, 3, &ex())?;
    let w1 = walk.aggregate_value(g, 1, &ex())?;
    let w2 = walk.aggregate_value(g, 2, &ex())?;
    tally.le(2, s1, s3);
    tally.le(3, s3, 2.0 * w2);
    tally.le(4, w2, 2.0 * w1);
    Ok(tally)
}

const GREEDY_RATIO: &[&str] = &[
    "greedy_ge_floor_opt_nonadaptive",
    "adaptive_greedy_ge_floor_opt_nonadaptive",
    "greedy_ge_quarter_floor_opt_adaptive",
    "adaptive_greedy_ge_quarter_floor_opt_adaptive",
];

/// `1 − (1 − 1/k)^k`.
pub fn greedy_floor(k: usize) -> f64 {
    1.0 - (1.0 - 1.0 / k as f64).powi(k as i32)
}

fn greedy_ratio(inst: &CorpusInstance) -> CliResult<Tally> {
    let g = &inst.graph;
    let mut tally = Tally::new(GREEDY_RATIO);
    let floor = greedy_floor(inst.budget.k());
    let opt_n = opt_nonadaptive(g, inst.budget, &ex())?.value;
    let opt_a = opt_adaptive(g, inst.budget, &ex())?.value;
    let seeds = greedy_nonadaptive(g, inst.budget, &ex())?.seeds;
    let greedy = spread_exact(g, &seeds, &ex())?.value;
    let adaptive = policy_spread(g, &AdaptiveGreedy::new(inst.budget, ex()), 1, &ex())?.value;
    tally.le(0, floor * opt_n, greedy);
    tally.le(1, floor * opt_n, adaptive);
    tally.le(2, floor / 4.0 * opt_a, greedy);
    tally.le(3, floor / 4.0 * opt_a, adaptive);
    Ok(tally)
}

const GOFW: &[&str] = &["selects_only_first_copy", "value_is_w_greedy_plus_k"];

fn gofw(inst: &CorpusInstance, w: f64) -> CliResult<Tally> {
    let base = &inst.graph;
    let mut tally = Tally::new(GOFW);
    let (g, _) = gen_g_of_w(base, w)?;
    let k = im_lab_core::Budget::new(inst.budget.k(), g.node_count())?;
    let tree = materialize_tree(&g, &AdaptiveGreedy::new(k, ex()), TREE_NODE_LIMIT)?;
    let outside = tree
        .internal()
        .filter(|node| node.action.is_some_and(|u| u.index() >= inst.n))
        .count();
    tally.record(0, if outside == 0 { 0.0 } else { -(outside as f64) }, 0.0);
    let value = tree.aggregate_value(&g, 1, &ex())?;
    let seeds = greedy_nonadaptive(base, inst.budget, &ex())?.seeds;
    let want = w * spread_exact(base, &seeds, &ex())?.value + inst.budget.k() as f64;
    tally.identity(1, value, want);
    Ok(tally)
}

const CHAINS: &[&str] = &["weighted_spread_equals_chain_spread"];

fn chains(index: usize, seed: u64) -> CliResult<(InstanceMargins, Tally)> {
    let n = 3 + index % 3;
    let g = gen_random_weighted(n, 0.5, 3, derive_seed(seed, stream::CORPUS, (1 << 32) + index as u64))?;
    let (h, heads) = g.expand_chains()?;
    let mut tally = Tally::new(CHAINS);
    for size in 1..=n {
        for set in (0..n).combinations(size) {
            let lhs = spread_exact(&g, &ids(&set), &ex())?.value;
            let mapped: Vec<NodeId> = set.iter().map(|&v| heads[v]).collect();
            let rhs = spread_exact(&h, &mapped, &ex())?.value;
            tally.identity(0, lhs, rhs);
        }
    }
    let margins = InstanceMargins {
        index,
        n,
        edges: g.edge_count(),
        k: 0,
        checks: tally.total_checks(),
        min_margin: tally.min_margin(),
    };
    Ok((margins, tally))
}

fn over_corpus<F>(name: &'static str, names: &'static [&'static str], corpus: &[CorpusInstance], f: F) -> CliResult<SuiteOutcome>
where
    F: Fn(&CorpusInstance) -> CliResult<Tally> + Sync,
{
    let tallies = corpus.par_iter().map(&f).collect::<CliResult<Vec<Tally>>>()?;
    let instances = corpus
        .iter()
        .zip(&tallies)
        .map(|(inst, t)| InstanceMargins {
            index: inst.index,
            n: inst.n,
            edges: inst.graph.edge_count(),
            k: inst.budget.k(),
            checks: t.total_checks(),
            min_margin: t.min_margin(),
        })
        .collect();
    Ok(finish(name, names, &tallies, instances))
}

fn finish(name: &'static str, names: &'static [&'static str], tallies: &[Tally], instances: Vec<InstanceMargins>) -> SuiteOutcome {
    let mut total = Tally::new(names);
    for t in tallies {
        total.merge(t);
    }
    SuiteOutcome {
        suite: name,
        checks: (0..names.len())
            .map(|i| CheckSummary {
                name: names[i],
                checks: total.checks[i],
                violations: total.violations[i],
                min_margin: total.min[i],
            })
            .collect(),
        instances,
    }
}

/// Runs one suite (or all of them) over a freshly generated corpus.
pub fn run_suite(suite: Suite, args: &VerifyArgs, seed: u64) -> CliResult<Vec<SuiteOutcome>> {
    if args.corpus_size > CORPUS_LIMIT || args.chain_graphs > CORPUS_LIMIT {
        return Err(im_lab_core::Error::TooLargeForExact {
            what: "verification corpus",
            size: args.corpus_size.max(args.chain_graphs) as u64,
            limit: CORPUS_LIMIT as u64,
        }
        .into());
    }
    if !(args.gofw_w > 0.0) {
        return Err(CliError::Usage("--gofw-w must be positive".into()));
    }
    let corpus = verify_corpus(args.corpus_size, seed)?;
    let one = |s: Suite| -> CliResult<SuiteOutcome> {
        match s {
            Suite::Aggregation => over_corpus("aggregation", AGGREGATION, &corpus, aggregation),
            Suite::Hybrid => over_corpus("hybrid", HYBRID, &corpus, hybrid),
            Suite::Telescoping => over_corpus("telescoping", TELESCOPING, &corpus, telescoping),
            Suite::Gap => over_corpus("gap", GAP, &corpus, gap),
            Suite::GreedyRatio => over_corpus("greedy-ratio", GREEDY_RATIO, &corpus, greedy_ratio),
            Suite::Gofw => over_corpus("gofw", GOFW, &corpus, |inst| gofw(inst, args.gofw_w)),
            Suite::Chains => {
                let runs = (0..args.chain_graphs)
                    .into_par_iter()
                    .map(|i| chains(i, seed))
                    .collect::<CliResult<Vec<_>>>()?;
                let (instances, tallies): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
                Ok(finish("chains", CHAINS, &tallies, instances))
            }
            Suite::All => unreachable!("expanded by the caller"),
        }
    };
    match suite {
        Suite::All => [
            Suite::Aggregation,
            Suite::Hybrid,
            Suite::Telescoping,
            Suite::Gap,
            Suite::GreedyRatio,
            Suite::Gofw,
            Suite::Chains,
        ]
        .into_iter()
        .map(one)
        .collect(),
        s => Ok(vec![one(s)?]),
    }
}

pub(super) fn run(args: &VerifyArgs, seed: u64) -> CliResult<Body> {
    let outcomes = run_suite(args.suite, args, seed)?;
    let verdicts = outcomes.iter().flat_map(|o| o.verdicts()).collect();
    Ok(Body {
        graph: None,
        results: json!({
            "corpus": { "size": args.corpus_size, "seed": seed },
            "suites": outcomes,
        }),
        verdicts,
    })
}
