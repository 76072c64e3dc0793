use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hmcrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmcrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hmcrank(args);
    assert!(
        out.status.success(),
        "hmcrank {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_kind(args: &[&str]) -> String {
    let out = hmcrank(args);
    assert!(!out.status.success(), "hmcrank {args:?} should fail");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    let v: Value = serde_json::from_str(line).expect("error is JSON");
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["simulate", "--classes", "chain:3", "--n-train", "500", "--n-test", "100", "--seed", "3", "--out", s(out)]);
    }
    for f in ["train/scores.csv", "train/labels.csv", "test/scores.csv", "model.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let scores = std::fs::read_to_string(a.join("train/scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 501);
    assert_eq!(scores.lines().next().unwrap().split(',').count(), 3);
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["command"], "simulate");
}

#[test]
fn fit_rank_evaluate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["simulate", "--classes", "chain:4", "--n-train", "3000", "--n-test", "400", "--seed", "1", "--out", s(d)]);
    let h = d.join("hierarchy.csv");
    let fit = |out: &Path, extra: &[&str]| {
        let mut args = vec!["fit", "--hierarchy", s(&h), "--scores", "", "--labels", "", "--out", s(out)];
        let (sc, lb) = (d.join("train/scores.csv"), d.join("train/labels.csv"));
        let (sc, lb) = (sc.to_str().unwrap().to_string(), lb.to_str().unwrap().to_string());
        args[4] = &sc;
        args[6] = &lb;
        args.extend_from_slice(extra);
        ok(&args);
    };
    fit(&d.join("m1.json"), &[]);
    fit(&d.join("m2.json"), &[]);
    assert_eq!(std::fs::read(d.join("m1.json")).unwrap(), std::fs::read(d.join("m2.json")).unwrap());
    fit(&d.join("m3.json"), &["--bandwidth", "0.1"]);
    assert_eq!(json(&d.join("m3.json"))["lpr"]["bandwidth"], 0.1);

    let test_scores = d.join("test/scores.csv");
    let mut catches = Vec::new();
    for algo in ["hierrank", "hierrank-fast", "cssa"] {
        let out = d.join(algo);
        ok(&[
            "rank", "--hierarchy", s(&h), "--scores", s(&test_scores), "--model", s(&d.join("m1.json")),
            "--variant", "full", "--algo", algo, "--out", s(&out),
        ]);
        let summary = json(&out.join("summary.json"));
        assert_eq!(summary["topological"], true);
        catches.push(summary["catch"].as_f64().unwrap());
    }
    assert!((catches[0] - catches[1]).abs() <= 1e-9 * catches[0].abs().max(1.0));
    assert!((catches[0] - catches[2]).abs() <= 1e-9 * catches[0].abs().max(1.0));

    ok(&["rank", "--hierarchy", s(&h), "--scores", s(&test_scores), "--variant", "raw", "--algo", "naive", "--out", s(&d.join("raw"))]);

    let metrics_dir = d.join("eval");
    ok(&[
        "evaluate", "--hierarchy", s(&h), "--ranking", s(&d.join("hierrank/ranking.csv")),
        "--labels", s(&d.join("test/labels.csv")), "--out", s(&metrics_dir),
    ]);
    let m = json(&metrics_dir.join("metrics.json"));
    assert_eq!(m["kappa"].as_array().unwrap().len(), 5);
    assert!(metrics_dir.join("hit_curve.csv").exists());
    assert!(metrics_dir.join("pr_curve.csv").exists());
}

#[test]
fn pipeline_intermediates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run");
    ok(&["pipeline", "--classes", "chain:4", "--objects", "2400", "--seed", "5", "--out", s(&p)]);
    let manifest = json(&p.join("manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["version"].is_string());
    let h = p.join("hierarchy.csv");

    // Refit from the written training split.
    let refit = dir.path().join("refit.json");
    ok(&[
        "fit", "--hierarchy", s(&h), "--scores", s(&p.join("data/train/scores.csv")),
        "--labels", s(&p.join("data/train/labels.csv")), "--out", s(&refit),
    ]);
    assert_eq!(json(&refit), json(&p.join("fit/model.json")));

    // Re-rank both held-out splits from files.
    for split in ["validation", "test"] {
        let out = dir.path().join(split);
        ok(&[
            "rank", "--hierarchy", s(&h), "--scores", s(&p.join(format!("data/{split}/scores.csv"))),
            "--model", s(&refit), "--variant", "full", "--algo", "hierrank-fast", "--out", s(&out),
        ]);
        assert_eq!(
            std::fs::read(out.join("ranking.csv")).unwrap(),
            std::fs::read(p.join(format!("{split}/ranking.csv"))).unwrap(),
            "{split}"
        );
    }

    // Re-evaluate with the pipeline's cutoff objectives.
    let ev = dir.path().join("eval");
    ok(&[
        "evaluate", "--hierarchy", s(&h), "--ranking", s(&dir.path().join("test/ranking.csv")),
        "--labels", s(&p.join("data/test/labels.csv")),
        "--validation-ranking", s(&dir.path().join("validation/ranking.csv")),
        "--validation-labels", s(&p.join("data/validation/labels.csv")),
        "--cutoff", "fdr:0.05", "--cutoff", "fdr:0.1", "--cutoff", "max-f1", "--out", s(&ev),
    ]);
    assert_eq!(json(&ev.join("metrics.json")), json(&p.join("metrics.json")));
}

#[test]
fn pipeline_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["pipeline", "--classes", "chain:3", "--objects", "600", "--seed", "2", "--threads", "1", "--out", s(&a)]);
    ok(&["pipeline", "--classes", "chain:3", "--objects", "600", "--seed", "2", "--threads", "3", "--out", s(&b)]);
    for f in ["test/ranking.csv", "metrics.json", "fit/model.json", "data/train/scores.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        error_kind(&["fit", "--hierarchy", "/nonexistent.csv", "--scores", "x", "--labels", "y", "--out", s(&d.join("m"))]),
        "io"
    );

    let dag = d.join("dag.csv");
    std::fs::write(&dag, "parent,child\nA,C\nB,C\n").unwrap();
    let scores = d.join("scores.csv");
    std::fs::write(&scores, "A,B,C\n0.9,0.2,0.5\n0.1,0.8,0.3\n").unwrap();
    let out = d.join("r");
    let rank = |mode: &str, algo: &str, variant: &str| {
        error_kind(&[
            "rank", "--hierarchy", s(&dag), "--mode", mode, "--scores", s(&scores),
            "--variant", variant, "--algo", algo, "--out", s(&out),
        ])
    };
    assert_eq!(rank("tree", "naive", "raw"), "multiple_parents");
    assert_eq!(rank("dag", "hierrank", "raw"), "not_a_tree");
    assert_eq!(rank("dag", "cssa", "raw"), "not_a_tree");
    assert_eq!(rank("dag", "dag-and", "full"), "invalid_argument");
    ok(&["rank", "--hierarchy", s(&dag), "--mode", "dag", "--scores", s(&scores), "--variant", "raw", "--algo", "dag-or", "--out", s(&out)]);

    let tree = d.join("tree.csv");
    std::fs::write(&tree, "parent,child\nA,B\nA,C\n").unwrap();
    assert_eq!(
        error_kind(&["rank", "--hierarchy", s(&tree), "--scores", s(&scores), "--variant", "raw", "--algo", "dag-and", "--out", s(&out)]),
        "not_a_dag"
    );
    assert_eq!(
        error_kind(&["pipeline", "--classes", "chain:2", "--objects", "100", "--splits", "0.5,0.5,0.5", "--out", s(&out)]),
        "invalid_argument"
    );
}
