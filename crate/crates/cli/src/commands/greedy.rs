use im_lab_core::policy::{greedy_nonadaptive, policy_spread, run_adaptive, AdaptiveGreedy};
use im_lab_core::realization::reachable_utility;
use im_lab_core::rng::{derive_seed, edge_coin, stream};
use im_lab_core::spread::mc::Moments;
use im_lab_core::spread::spread;
use im_lab_core::{Mode, NodeId};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{budget, estimator, load, Body};
use crate::args::{Common, GreedyArgs};
use crate::report::GraphInfo;
use crate::CliResult;

#[derive(Serialize)]
struct RunTrace {
    run: u64,
    seeds: Vec<NodeId>,
    value: f64,
}

pub(super) fn run(common: &Common, a: &GreedyArgs) -> CliResult<Body> {
    let (graph, meta) = load(common)?;
    let k = budget(common, &graph, meta.as_ref())?;
    let cfg = estimator(common);
    let results = if !a.adaptive {
        let res = greedy_nonadaptive(&graph, k, &cfg)?;
        let value = spread(&graph, &res.seeds, &cfg.with_seed(derive_seed(common.seed, stream::EVAL, 0)))?;
        json!({
            "variant": "nonadaptive",
            "k": k,
            "seeds": res.seeds,
            "trace": res.steps,
            "spread": value,
        })
    } else {
        let policy = AdaptiveGreedy::new(k, cfg);
        let runs = (0..a.hidden_replicates)
            .into_par_iter()
            .map(|i| {
                let h = derive_seed(common.seed, stream::HIDDEN, i);
                let hidden = |e: usize| edge_coin(h, e) < graph.edge(e).p;
                let run = run_adaptive(&graph, &policy, &hidden)?;
                let value = reachable_utility(&graph, &run.seeds, &hidden);
                Ok(RunTrace {
                    run: i,
                    seeds: run.seeds,
                    value,
                })
            })
            .collect::<CliResult<Vec<RunTrace>>>()?;
        let mut acc = Moments::default();
        for r in &runs {
            acc.push(r.value);
        }
        let exact = match cfg.mode {
            Mode::Exact => Some(policy_spread(&graph, &policy, 1, &cfg)?),
            _ => None,
        };
        json!({
            "variant": "adaptive",
            "k": k,
            "hidden_replicates": a.hidden_replicates,
            "spread": acc.estimate(),
            "exact_spread": exact,
            "traces": if a.no_traces { None } else { Some(runs) },
        })
    };
    Ok(Body {
        graph: Some(GraphInfo::of(&graph)),
        results,
        verdicts: Vec::new(),
    })
}
