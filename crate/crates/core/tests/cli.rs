use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use motifcount::ags::covering_threshold;
use motifcount::buildup::round_path;
use motifcount::graph::{ColoredGraph, Graph};
use motifcount::graphlet::census::class_count;
use motifcount::oracle;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_motifcount"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_graph(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn colorful_triangle_seed() -> u64 {
    let g = Arc::new(Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
    (1..).find(|&seed| {
        let c = ColoredGraph::uniform(Arc::clone(&g), 3, seed).unwrap();
        let mut cs = c.colors().to_vec();
        cs.sort_unstable();
        cs == [0, 1, 2]
    })
    .unwrap()
}

#[test]
fn build_triangle_writes_rounds_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "tri.txt", "0 1\n1 2\n2 0\n");
    let tables = dir.path().join("tables");
    let out = run(&["build", "--graph", s(&graph), "-k", "3", "--seed", "1", "--tables", s(&tables)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for h in 1..=3 {
        assert!(round_path(&tables, h).exists());
    }
    assert!(!round_path(&tables, 4).exists());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(tables.join("manifest.json")).unwrap()).unwrap();
    let g = Arc::new(Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
    let truth = oracle::exact_colorful_treelets(&ColoredGraph::uniform(g, 3, 1).unwrap(), 3).unwrap();
    assert_eq!(manifest["total"], truth.total.to_string());
    assert_eq!(manifest["k"], 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    for line in stderr.lines() {
        serde_json::from_str::<serde_json::Value>(line).expect("progress lines are json");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "tri.txt", "0 1\n1 2\n2 0\n");
    let t = dir.path().join("t");
    let out = run(&["build", "--graph", s(&graph), "-k", "17", "--tables", s(&t)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["build", "--graph", s(&graph), "-k", "4", "--lambda", "0.5", "--tables", s(&t)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_graph_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    let out = run(&["build", "--graph", s(&dir.path().join("nope.txt")), "-k", "3", "--tables", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sample_triangle_and_budget_rules() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "tri.txt", "0 1\n1 2\n2 0\n");
    let tables = dir.path().join("tables");
    let seed = colorful_triangle_seed().to_string();
    let out = run(&["build", "--graph", s(&graph), "-k", "3", "--seed", &seed, "--tables", s(&tables)]);
    assert!(out.status.success());
    let csv = dir.path().join("est.csv");
    let sample = |extra: &[&str]| {
        let mut args = vec!["sample", "--graph", s(&graph), "--tables", s(&tables), "--out", s(&csv)];
        args.extend_from_slice(extra);
        run(&args)
    };
    let out = sample(&["--samples", "1000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "signature_hex,count_estimate,frequency,samples,covered,mode");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains(",4.500000,"), "{}", rows[1]);
    let first = text.clone();
    assert!(sample(&["--samples", "1000"]).status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), first);

    assert_eq!(sample(&[]).status.code(), Some(2));
    assert_eq!(sample(&["--samples", "0"]).status.code(), Some(2));
}

#[test]
fn ags_logs_the_computed_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g.txt", "0 1\n1 2\n2 3\n3 0\n0 2\n3 4\n4 5\n5 1\n");
    let tables = dir.path().join("tables");
    assert!(run(&["build", "--graph", s(&graph), "-k", "4", "--seed", "3", "--tables", s(&tables)]).status.success());
    let csv = dir.path().join("ags.csv");
    let out = run(&[
        "sample", "--graph", s(&graph), "--tables", s(&tables), "--mode", "ags", "--eps", "0.25", "--delta", "0.1",
        "--samples", "2000", "--out", s(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = covering_threshold(0.25, 0.1, class_count(4).unwrap()).unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let logged = stderr
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["event"] == "threshold")
        .expect("threshold line");
    assert_eq!(logged["value"], expected);
    // every connected 4-node class is listed
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 6);
}

#[test]
fn sampling_against_another_graph_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "tri.txt", "0 1\n1 2\n2 0\n");
    let other = write_graph(dir.path(), "path.txt", "0 1\n1 2\n");
    let tables = dir.path().join("tables");
    assert!(run(&["build", "--graph", s(&graph), "-k", "3", "--tables", s(&tables)]).status.success());
    let out = run(&["sample", "--graph", s(&other), "--tables", s(&tables), "--samples", "10", "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn census_prints_class_counts() {
    let out = run(&["census", "-k", "8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("colored_treelets: 1991"));
    assert!(text.contains("graphlet_classes: 11117"));
    assert!(text.contains("rooted_shapes: 115"));
    let text = String::from_utf8(run(&["census", "-k", "5"]).stdout).unwrap();
    assert!(text.contains("graphlet_classes: 21"));
}

#[test]
fn exact_then_sample_with_truth_writes_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..10 {
        text.push_str(&format!("{} {}\n{} {}\n", i, (i + 1) % 10, i, (i + 3) % 10));
    }
    let graph = write_graph(dir.path(), "g.txt", &text);
    let truth = dir.path().join("truth.csv");
    assert!(run(&["exact", "--graph", s(&graph), "-k", "4", "--out", s(&truth)]).status.success());
    let tables = dir.path().join("tables");
    assert!(run(&["build", "--graph", s(&graph), "-k", "4", "--tables", s(&tables), "--threads", "2"]).status.success());
    let csv = dir.path().join("est.csv");
    let out = run(&[
        "sample", "--graph", s(&graph), "--tables", s(&tables), "--samples", "5000", "--out", s(&csv), "--truth", s(&truth),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let err = std::fs::read_to_string(dir.path().join("est.err.csv")).unwrap();
    assert!(err.starts_with("signature_hex,truth,estimate,err"));
}

#[test]
fn builds_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..40 {
        text.push_str(&format!("{} {}\n{} {}\n", i, (i + 1) % 40, i, (i * 7 + 3) % 40));
    }
    let graph = write_graph(dir.path(), "g.txt", &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (t, threads) in [(&a, "1"), (&b, "3")] {
        assert!(run(&["build", "--graph", s(&graph), "-k", "5", "--seed", "9", "--tables", s(t), "--threads", threads]).status.success());
    }
    for h in [1, 2, 3, 5] {
        assert_eq!(std::fs::read(round_path(&a, h)).unwrap(), std::fs::read(round_path(&b, h)).unwrap(), "round {h}");
    }
}
