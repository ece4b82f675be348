use im_lab_core::spread::aggregate_spread_set;
use im_lab_core::NodeId;
use serde_json::json;

use super::{estimator, load, parse_nodes, Body};
use crate::args::{Common, SpreadArgs};
use crate::report::GraphInfo;
use crate::CliResult;

pub(super) fn run(common: &Common, a: &SpreadArgs) -> CliResult<Body> {
    let (graph, _) = load(common)?;
    let seeds: Vec<NodeId> = parse_nodes(&a.seeds)?.into_iter().map(NodeId::new).collect();
    for &v in &seeds {
        graph.check_node(v)?;
    }
    let est = aggregate_spread_set(&graph, &seeds, common.t, &estimator(common))?;
    Ok(Body {
        graph: Some(GraphInfo::of(&graph)),
        results: json!({ "seeds": seeds, "t": common.t, "estimate": est }),
        verdicts: Vec::new(),
    })
}
