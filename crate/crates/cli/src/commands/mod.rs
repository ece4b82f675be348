mod bad_example;
mod gap;
mod gen;
mod greedy;
mod opt;
mod spread;
mod verify;

use std::path::{Path, PathBuf};

use im_lab_core::constructions::Metadata;
use im_lab_core::{load_graph, Budget, EstimatorConfig, InfluenceGraph, Mode};
use serde_json::Value;

use crate::args::{Cli, Command, Common};
use crate::report::{GraphInfo, Report, Verdict};
use crate::{CliError, CliResult, Outcome};

pub use verify::{run_suite, SuiteOutcome};

pub(crate) fn run(cli: &Cli) -> CliResult<Outcome> {
    let common = &cli.common;
    validate_common(common)?;
    let config = serde_json::to_value(cli).expect("arguments serialize");
    let name = cli.command.name();
    match &cli.command {
        Command::Gen(a) => gen::run(common, a, config),
        Command::Spread(a) => finish(name, config, common, spread::run(common, a)?),
        Command::Greedy(a) => finish(name, config, common, greedy::run(common, a)?),
        Command::Opt(a) => finish(name, config, common, opt::run(common, a)?),
        Command::Gap(a) => finish(name, config, common, gap::run(common, a)?),
        Command::Verify(a) => finish(name, config, common, verify::run(a, common.seed)?),
        Command::BadExample(a) => finish(name, config, common, bad_example::run(common, a)?),
    }
}

/// What a subcommand hands back for the report.
pub(crate) struct Body {
    pub graph: Option<GraphInfo>,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
}

fn finish(name: &'static str, config: Value, common: &Common, body: Body) -> CliResult<Outcome> {
    Ok(Outcome {
        report: Report::new(name, config, body.graph, body.results, body.verdicts),
        report_path: common.out.clone(),
        files: Vec::new(),
    })
}

fn validate_common(common: &Common) -> CliResult<()> {
    if common.t == 0 {
        return Err(CliError::Usage("--t must be at least 1".into()));
    }
    if common.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    if common.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    Ok(())
}

/// `g.json` → `g.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub(crate) fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The graph named by `--graph` and its sidecar, if one exists.
pub(crate) fn load(common: &Common) -> CliResult<(InfluenceGraph, Option<Metadata>)> {
    let path = common
        .graph
        .as_ref()
        .ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    let graph = load_graph(&read(path)?, common.lenient)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let meta: Metadata = serde_json::from_slice(&read(&side)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", side.display())))?;
        Some(meta)
    } else {
        None
    };
    Ok((graph, meta))
}

/// `--k`, or the budget recorded in the sidecar.
pub(crate) fn budget(common: &Common, graph: &InfluenceGraph, meta: Option<&Metadata>) -> CliResult<Budget> {
    let k = common
        .k
        .or_else(|| meta.and_then(|m| m.budget))
        .ok_or_else(|| CliError::Usage("--k is required (no budget in the graph metadata)".into()))?;
    Ok(Budget::new(k, graph.node_count())?)
}

pub(crate) fn estimator(common: &Common) -> EstimatorConfig {
    EstimatorConfig {
        mode: Mode::from(common.mode),
        replicates: common.replicates,
        base_seed: common.seed,
        ..Default::default()
    }
}

/// Parses `"0,3,7"`; the empty string is the empty set.
pub(crate) fn parse_nodes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("not a node id: {t:?}")))
        })
        .collect()
}
