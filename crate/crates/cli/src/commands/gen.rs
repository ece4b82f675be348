use im_lab_core::constructions::{
    gen_bad_example, gen_bipartite_gap, gen_g_of_w, gen_random, Construction, Metadata,
};
use im_lab_core::save_graph;
use serde_json::{json, Value};

use super::{load, sidecar_path};
use crate::args::{Common, ConstructionArg, GenArgs};
use crate::report::{GraphInfo, Report};
use crate::{CliError, CliResult, Outcome};

fn need<T: Copy>(v: Option<T>, flag: &str, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("{what} needs --{flag}")))
}

pub(super) fn run(common: &Common, a: &GenArgs, config: Value) -> CliResult<Outcome> {
    let path = common
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("gen needs --out for the graph file".into()))?;
    let (graph, meta) = match a.construction {
        ConstructionArg::BipartiteGap => {
            let (g, _, meta) = gen_bipartite_gap(need(a.m, "m", "bipartite-gap")?)?;
            (g, meta)
        }
        ConstructionArg::BadExample => {
            let d = need(a.d, "d", "bad-example")?;
            let w = need(a.w, "w", "bad-example")?;
            let (g, _, meta) = gen_bad_example(d, w)?;
            (g, meta)
        }
        ConstructionArg::GOfW => {
            let w = need(a.w, "w", "g-of-w")?;
            let (base, _) = load(common)?;
            gen_g_of_w(&base, w)?
        }
        ConstructionArg::Random => {
            let n = need(a.n, "n", "random")?;
            let g = gen_random(n, a.p_edge, a.p_low, a.p_high, common.seed)?;
            let meta = Metadata {
                construction: Construction::Random {
                    n,
                    p_edge: a.p_edge,
                    p_low: a.p_low,
                    p_high: a.p_high,
                    seed: common.seed,
                },
                budget: None,
                budget_real: None,
                subsets: None,
            };
            (g, meta)
        }
    };
    let side = sidecar_path(&path);
    let mut meta_bytes = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    meta_bytes.push(b'\n');
    // Keep the (possibly huge) subset table out of the report.
    let summary = Metadata {
        subsets: None,
        ..meta.clone()
    };
    let results = json!({
        "graph_path": path,
        "metadata_path": side,
        "metadata": summary,
    });
    let report = Report::new("gen", config, Some(GraphInfo::of(&graph)), results, Vec::new());
    Ok(Outcome {
        report,
        report_path: None,
        files: vec![(path, save_graph(&graph)), (side, meta_bytes)],
    })
}
