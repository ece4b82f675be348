use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use im_lab_core::Mode;
use serde::Serialize;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "im-lab", version, about = "Adaptive and non-adaptive influence maximization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Graph file (JSON).
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,

    /// Seed budget; defaults to the budget in the graph's `.meta.json` sidecar.
    #[arg(long, global = true)]
    pub k: Option<usize>,

    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo replicates per estimate.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub replicates: u64,

    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,

    /// Number of independent realizations feeding each seed (`σ^t`).
    #[arg(long, global = true, default_value_t = 1)]
    pub t: usize,

    /// Report path; stdout when absent. For `gen`, the graph path.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Leave the wall-clock timestamp out of the report.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_timestamp: bool,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub workers: Option<usize>,

    /// Accept graph files with unsorted edges.
    #[arg(long, global = true)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exact,
    Mc,
    Auto,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Mc => Mode::MonteCarlo,
            ModeArg::Auto => Mode::Auto,
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a graph and its metadata sidecar.
    Gen(GenArgs),
    /// Estimate the spread of a seed set.
    Spread(SpreadArgs),
    /// Run greedy or adaptive greedy.
    Greedy(GreedyArgs),
    /// Exact optimum over seed sets or adaptive policies.
    Opt(OptArgs),
    /// Adaptivity gap: exact optima, or named policies on larger graphs.
    Gap(GapArgs),
    /// Check the structural inequalities and identities over a tiny-graph corpus.
    Verify(VerifyArgs),
    /// Greedy against the adaptive reference on the bad-example construction.
    BadExample(BadExampleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Spread(_) => "spread",
            Command::Greedy(_) => "greedy",
            Command::Opt(_) => "opt",
            Command::Gap(_) => "gap",
            Command::Verify(_) => "verify",
            Command::BadExample(_) => "bad-example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionArg {
    BipartiteGap,
    BadExample,
    GOfW,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub construction: ConstructionArg,
    /// Bipartite parameter.
    #[arg(long)]
    pub m: Option<usize>,
    /// Bad-example size.
    #[arg(long)]
    pub d: Option<usize>,
    /// Heavy-node weight (bad example, `G(w)`).
    #[arg(long)]
    pub w: Option<f64>,
    /// Random graph size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub p_edge: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_high: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpreadArgs {
    /// Comma-separated node ids; empty for the empty set.
    #[arg(long, default_value = "")]
    pub seeds: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreedyArgs {
    #[arg(long)]
    pub adaptive: bool,
    /// Hidden realizations the adaptive policy is run against.
    #[arg(long, default_value_t = 100)]
    pub hidden_replicates: u64,
    /// Omit per-run seed traces from the report.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptArgs {
    #[arg(long)]
    pub adaptive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    /// Bipartite-instance policy (adaptive).
    Bipartite,
    /// Adaptive greedy.
    GreedyAdaptive,
    /// Bad-example reference policy (adaptive).
    BadExampleReference,
    /// Non-adaptive greedy.
    GreedyNonadaptive,
}

impl PolicyArg {
    pub fn is_adaptive(self) -> bool {
        !matches!(self, PolicyArg::GreedyNonadaptive)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GapArgs {
    /// Compare these policies instead of exact optima (repeatable).
    #[arg(long, value_enum)]
    pub policy: Vec<PolicyArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Aggregation,
    Hybrid,
    Telescoping,
    Gap,
    GreedyRatio,
    Gofw,
    Chains,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Number of corpus instances.
    #[arg(long, default_value_t = 200)]
    pub corpus_size: usize,
    /// Number of weighted graphs for the chain suite.
    #[arg(long, default_value_t = 50)]
    pub chain_graphs: usize,
    /// Weight of the `G₂` copy in the `G(w)` suite.
    #[arg(long, default_value_t = 10.0)]
    pub gofw_w: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BadExampleArgs {
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 200.0)]
    pub w: f64,
}
