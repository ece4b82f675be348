use im_lab_core::policy::{opt_adaptive, opt_nonadaptive};
use serde_json::json;

use super::{budget, estimator, load, Body};
use crate::args::{Common, OptArgs};
use crate::report::GraphInfo;
use crate::CliResult;

pub(super) fn run(common: &Common, a: &OptArgs) -> CliResult<Body> {
    let (graph, meta) = load(common)?;
    let k = budget(common, &graph, meta.as_ref())?;
    let cfg = estimator(common);
    let res = if a.adaptive {
        opt_adaptive(&graph, k, &cfg)?
    } else {
        opt_nonadaptive(&graph, k, &cfg)?
    };
    Ok(Body {
        graph: Some(GraphInfo::of(&graph)),
        results: json!({
            "variant": if a.adaptive { "adaptive" } else { "nonadaptive" },
            "k": k,
            "value": res.value,
            "exact": res.exact,
            "witness": res.witness,
        }),
        verdicts: Vec::new(),
    })
}
