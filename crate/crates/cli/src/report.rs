//! The JSON report every subcommand emits.

use im_lab_core::{save_graph, InfluenceGraph};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// Distance from the failure boundary; negative when failing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn check(name: impl Into<String>, ok: bool, margin: Option<f64>, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            margin,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            status: Status::Skipped,
            margin: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphInfo {
    pub digest: String,
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: f64,
}

impl GraphInfo {
    pub fn of(graph: &InfluenceGraph) -> Self {
        GraphInfo {
            digest: digest(graph),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            total_weight: graph.total_weight(),
        }
    }
}

/// `sha256:<hex>` of the canonical serialization.
pub fn digest(graph: &InfluenceGraph) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(save_graph(graph))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &'static str, config: Value, graph: Option<GraphInfo>, results: Value, verdicts: Vec<Verdict>) -> Self {
        let passed = verdicts.iter().all(|v| v.status != Status::Fail);
        Report {
            tool: "im-lab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            graph,
            timestamp: None,
            results,
            verdicts,
            passed,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use im_lab_core::Edge;

    #[test]
    fn digest_is_stable_and_content_based() {
        let a = InfluenceGraph::new(2, vec![Edge::new(0, 1, 0.5)]).unwrap();
        let b = InfluenceGraph::new(2, vec![Edge::new(0, 1, 0.25)]).unwrap();
        assert_eq!(digest(&a), digest(&a.clone()));
        assert_ne!(digest(&a), digest(&b));
        assert!(digest(&a).starts_with("sha256:"));
        assert_eq!(digest(&a).len(), 7 + 64);
    }

    #[test]
    fn failing_verdict_fails_the_report() {
        let ok = Report::new("x", Value::Null, None, Value::Null, vec![Verdict::check("a", true, None, "")]);
        assert_eq!(ok.exit_code(), 0);
        let bad = Report::new(
            "x",
            Value::Null,
            None,
            Value::Null,
            vec![Verdict::skipped("s", ""), Verdict::check("b", false, Some(-1.0), "")],
        );
        assert_eq!(bad.exit_code(), 1);
        assert!(bad.to_json().ends_with("}\n"));
    }
}
