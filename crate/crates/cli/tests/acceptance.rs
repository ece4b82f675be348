//! Acceptance criteria 1 to 11, one result line each.
//!
//! Built with `harness = false` so the lines are printed even when every
//! criterion passes. Pass criterion numbers as arguments to run a subset.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use im_lab_core::spread::{aggregate_spread_set, spread_exact};
use im_lab_core::{Edge, EstimatorConfig, InfluenceGraph, NodeId};
use serde_json::Value;

type Check = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Check + 'a>);

struct Run {
    code: i32,
    stdout: String,
    report: Value,
}

fn im_lab(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_im-lab"))
        .args(args)
        .output()
        .expect("spawn im-lab");
    let stdout = String::from_utf8(out.stdout).expect("utf-8 report");
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout,
        report,
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs as f64, || {
        format!("runtime {:.1}s exceeds {limit_secs}s", elapsed.as_secs_f64())
    })
}

/// Runs one verify suite and requires every listed check to be exercised
/// with zero violations.
fn suite(name: &str, expected: &[&str], extra: &[&str], limit_secs: u64) -> Check {
    let start = Instant::now();
    let mut args = vec!["verify", "--suite", name, "--seed", "0", "--no-timestamp"];
    args.extend_from_slice(extra);
    let run = im_lab(&args);
    let elapsed = start.elapsed();
    let checks = run.report["results"]["suites"][0]["checks"]
        .as_array()
        .ok_or_else(|| format!("no report (exit {})", run.code))?;
    let mut parts = Vec::new();
    for name in expected {
        let c = checks
            .iter()
            .find(|c| c["name"] == *name)
            .ok_or_else(|| format!("check {name} missing"))?;
        let n = c["checks"].as_u64().unwrap_or(0);
        let bad = c["violations"].as_u64().unwrap_or(u64::MAX);
        ensure(n > 0, || format!("{name}: nothing checked"))?;
        ensure(bad == 0, || format!("{name}: {bad} violations in {n} checks"))?;
        parts.push(format!("{name} {n} checks, min margin {:.3e}", f(&c["min_margin"])));
    }
    ensure(run.code == 0, || format!("exit code {}", run.code))?;
    within(elapsed, limit_secs)?;
    Ok(format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn two_node() -> InfluenceGraph {
    InfluenceGraph::new(2, vec![Edge::new(0, 1, 0.5)]).expect("valid graph")
}

/// Enumerates the `t` copies of the single edge directly.
fn two_node_oracle(t: u32) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << t) {
        let pr = 0.5f64.powi(t as i32);
        total += pr * if mask != 0 { 2.0 } else { 1.0 };
    }
    total
}

fn c1() -> Check {
    let start = Instant::now();
    let g = two_node();
    let cfg = EstimatorConfig::exact();
    let u = [NodeId::new(0)];
    let mut got = vec![spread_exact(&g, &u, &cfg).map_err(|e| e.to_string())?.value];
    for t in [2, 3] {
        got.push(aggregate_spread_set(&g, &u, t, &cfg).map_err(|e| e.to_string())?.value);
    }
    let elapsed = start.elapsed();
    for (i, (&v, want)) in got.iter().zip([1.5, 1.75, 1.875]).enumerate() {
        let oracle = two_node_oracle(i as u32 + 1);
        ensure((v - want).abs() <= 1e-12 && (v - oracle).abs() <= 1e-12, || {
            format!("t={}: got {v}, expected {want}, oracle {oracle}", i + 1)
        })?;
    }
    within(elapsed, 1)?;
    Ok(format!("values {got:?}; {:.3}ms", elapsed.as_secs_f64() * 1e3))
}

fn c2() -> Check {
    suite("aggregation", &["aggregate_t2_le_2_spread", "aggregate_t3_le_3_spread"], &[], 120)
}

fn c3() -> Check {
    suite(
        "hybrid",
        &["delta3_adaptive_le_2_delta2", "first_step_le_delta2", "second_step_le_delta2"],
        &[],
        600,
    )
}

fn c4() -> Check {
    suite(
        "telescoping",
        &["adaptive_marginals_sum_to_policy_value", "nonadaptive_marginals_sum_to_walk_value"],
        &[],
        600,
    )
}

fn c5() -> Check {
    suite(
        "gap",
        &[
            "ratio_at_least_one",
            "ratio_at_most_four",
            "adaptive_le_hybrid",
            "hybrid_le_2_walk2",
            "walk2_le_2_walk",
        ],
        &[],
        600,
    )
}

fn c6() -> Check {
    suite(
        "greedy-ratio",
        &[
            "greedy_ge_floor_opt_nonadaptive",
            "adaptive_greedy_ge_floor_opt_nonadaptive",
            "greedy_ge_quarter_floor_opt_adaptive",
            "adaptive_greedy_ge_quarter_floor_opt_adaptive",
        ],
        &[],
        600,
    )
}

/// Ratio target as stated by the criterion.
const BAD_EXAMPLE_RATIO: f64 = 0.6062;

fn c7() -> Check {
    let start = Instant::now();
    let run = im_lab(&[
        "bad-example",
        "--d",
        "100",
        "--w",
        "200",
        "--replicates",
        "100000",
        "--seed",
        "7",
        "--no-timestamp",
    ]);
    let elapsed = start.elapsed();
    let r = &run.report["results"];
    ensure(!r.is_null(), || format!("no report (exit {})", run.code))?;
    let g = &r["greedy"];
    let v1 = g["v1_prefix"].as_u64().unwrap_or(0);
    let v2 = g["v2_picks"].as_u64().unwrap_or(0);
    let v2_want = ((2.0 * 100.0 / (std::f64::consts::E + 1.0)).floor() as u64) + 1;
    let trace_len = g["trace"].as_array().map_or(0, Vec::len) as u64;
    ensure(v1 == 99 && v1 + v2 == trace_len && v2.abs_diff(v2_want) <= 1, || {
        format!("(a) trace: {v1} V1 then {v2} V2 of {trace_len} (expected 99 then {v2_want} +- 1)")
    })?;

    let mc = f(&g["spread_mc"]["value"]);
    let se = f(&g["spread_mc"]["stderr"]);
    let closed = f(&r["closed_forms"]["greedy_closed_form_at_budget"]);
    let closed_real = f(&r["closed_forms"]["greedy_closed_form"]);
    ensure((mc - closed).abs() <= 4.0 * se, || {
        format!("(b) MC {mc:.2} +- {se:.2} vs closed form {closed:.2}")
    })?;

    let reference = f(&r["reference"]["spread_mc"]["value"]);
    let ratio = f(&r["ratio"]["value"]);
    ensure((ratio - BAD_EXAMPLE_RATIO).abs() <= 0.02, || {
        format!("(c) ratio {ratio:.5} vs {BAD_EXAMPLE_RATIO} +- 0.02")
    })?;
    ensure(run.code == 0, || format!("exit code {}", run.code))?;
    within(elapsed, 300)?;
    Ok(format!(
        "(a) 99 V1 then {v2} V2; (b) MC {mc:.2} +- {se:.2} vs {closed:.2} at the integer budget \
         (real-budget form {closed_real:.2}); (c) ratio {ratio:.5} (reference {reference:.1}); {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn c8(dir: &Path) -> Check {
    let graph = dir.join("bipartite.json");
    let graph = graph.to_str().expect("utf-8 path");
    let gen = im_lab(&["gen", "--construction", "bipartite-gap", "--m", "2", "--out", graph, "--no-timestamp"]);
    ensure(gen.code == 0, || format!("gen exit code {}", gen.code))?;
    let nodes = gen.report["graph"]["nodes"].as_u64().unwrap_or(0);
    let edges = gen.report["graph"]["edges"].as_u64().unwrap_or(0);
    ensure(nodes == 78 && edges == 280, || format!("built {nodes} nodes / {edges} edges"))?;

    let gap = im_lab(&[
        "gap",
        "--graph",
        graph,
        "--policy",
        "bipartite",
        "--policy",
        "greedy-nonadaptive",
        "--mode",
        "mc",
        "--replicates",
        "20000",
        "--seed",
        "3",
        "--no-timestamp",
    ]);
    let r = &gap.report["results"];
    let notes = r["notes"].to_string();
    ensure(notes.contains("e/(e-1)"), || "report does not state the asymptotic gap is out of reach".into())?;
    let value = |name: &str| {
        r["policies"]
            .as_array()
            .and_then(|ps| ps.iter().find(|p| p["policy"] == name))
            .map(|p| (f(&p["estimate"]["value"]), f(&p["estimate"]["stderr"])))
            .unwrap_or((f64::NAN, f64::NAN))
    };
    let (bp, bp_se) = value("bipartite");
    let (gr, gr_se) = value("greedy-nonadaptive");
    // Context only: adaptive greedy, evaluated exactly, on the same instance.
    let reference = im_lab(&["gap", "--graph", graph, "--policy", "greedy-adaptive", "--policy", "greedy-nonadaptive", "--no-timestamp"]);
    let ag = reference.report["results"]["policies"][0]["estimate"]["value"].as_f64().unwrap_or(f64::NAN);
    let band = 4.0 * bp_se.hypot(gr_se);
    let summary = format!(
        "78 nodes / 280 edges; bipartite policy {bp:.4} +- {bp_se:.4} vs non-adaptive greedy {gr:.4} +- {gr_se:.4} \
         (difference {:.4}, required > {band:.4}); adaptive greedy {ag:.4} for reference",
        bp - gr
    );
    ensure(bp - gr > band, || summary.clone())?;
    Ok(summary)
}

fn c9() -> Check {
    suite("gofw", &["selects_only_first_copy", "value_is_w_greedy_plus_k"], &["--gofw-w", "10"], 600)
}

fn c10(dir: &Path) -> Check {
    let graph = dir.join("random.json");
    let graph = graph.to_str().expect("utf-8 path");
    let gen = im_lab(&["gen", "--construction", "random", "--n", "12", "--p-edge", "0.3", "--seed", "5", "--out", graph, "--no-timestamp"]);
    ensure(gen.code == 0, || format!("gen exit code {}", gen.code))?;
    let runs: Vec<Vec<&str>> = vec![
        vec!["spread", "--graph", graph, "--seeds", "0,1", "--mode", "mc", "--replicates", "20000", "--t", "2"],
        vec!["greedy", "--graph", graph, "--k", "3", "--mode", "mc", "--replicates", "2000"],
        vec!["greedy", "--graph", graph, "--k", "2", "--adaptive", "--mode", "mc", "--replicates", "500", "--hidden-replicates", "40"],
        vec!["gap", "--graph", graph, "--k", "2", "--policy", "greedy-adaptive", "--policy", "greedy-nonadaptive", "--mode", "mc", "--replicates", "2000"],
        vec!["verify", "--suite", "all", "--corpus-size", "30", "--chain-graphs", "10"],
        vec!["bad-example", "--d", "20", "--w", "20", "--replicates", "5000"],
    ];
    let mut compared = 0;
    for base in &runs {
        let mut reports = Vec::new();
        for workers in ["1", "2", "8"] {
            let mut args = base.clone();
            args.extend(["--seed", "11", "--no-timestamp", "--workers", workers]);
            let run = im_lab(&args);
            ensure(!run.stdout.is_empty(), || format!("{}: empty report", base[0]))?;
            reports.push(run.stdout);
        }
        ensure(reports.windows(2).all(|w| w[0] == w[1]), || {
            format!("{} reports differ across worker counts", base.join(" "))
        })?;
        compared += 1;
    }
    Ok(format!("{compared} commands byte-identical with 1, 2 and 8 workers"))
}

fn c11() -> Check {
    suite("chains", &["weighted_spread_equals_chain_spread"], &["--chain-graphs", "50"], 600)
}

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        (1, "two-node exact values", Box::new(c1)),
        (2, "aggregate spread at most t times spread", Box::new(c2)),
        (3, "hybrid policy marginal bounds", Box::new(c3)),
        (4, "telescoping identities", Box::new(c4)),
        (5, "exact adaptivity gap in [1, 4]", Box::new(c5)),
        (6, "greedy approximation floor", Box::new(c6)),
        (7, "bad example reproduction", Box::new(c7)),
        (8, "bipartite lower-bound construction", Box::new(|| c8(dir.path()))),
        (9, "G(w) wrapper", Box::new(c9)),
        (10, "determinism across worker counts", Box::new(|| c10(dir.path()))),
        (11, "chain equivalence", Box::new(c11)),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in &criteria {
        if !only.is_empty() && !only.contains(id) {
            continue;
        }
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(*id);
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {tag} {name}: {detail}");
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
