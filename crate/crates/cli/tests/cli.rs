use std::path::{Path, PathBuf};

use assert_cmd::Command;
use proxysel::correlation::{relevance_ranking, CorrelationMetric};
use proxysel::data::{load_checkpoints, load_matrix, Format, Manifest};
use proxysel::normalize::normalize_pipeline;
use proxysel::robustness::robustness_from_matrix;
use proxysel::selection::{predict_all, select_proxies, Aggregation, SelectionConfig};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn proxysel() -> Command {
    Command::cargo_bin("proxysel").unwrap()
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Runs relevance, robustness, select and predict through the binary and
/// returns the temp dir holding their outputs.
fn chain() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    proxysel()
        .args(["--out-dir", d.to_str().unwrap(), "relevance", "--baseline", "T-eval", "--out", "rel.json", "--matrix"])
        .arg(fixture("leaderboard_synthetic.csv"))
        .assert()
        .success();
    proxysel()
        .args(["--out-dir", d.to_str().unwrap(), "robustness", "--out", "rob.json", "--matrix"])
        .arg(fixture("table4_small_models.csv"))
        .arg("--manifest")
        .arg(fixture("table4_groups.json"))
        .assert()
        .success();
    proxysel()
        .current_dir(d)
        .args(["select", "--relevance", "rel.json", "--robustness", "rob.json", "--out", "set.json"])
        .assert()
        .success();
    proxysel()
        .current_dir(d)
        .args(["predict", "--proxyset", "set.json", "--out", "pred.json", "--scores"])
        .arg(fixture("table9_checkpoints.csv"))
        .assert()
        .success();
    dir
}

#[test]
fn chained_subcommands_match_library() {
    let dir = chain();
    let d = dir.path();

    let scores = load_matrix::<f64>(fixture("leaderboard_synthetic.csv"), Format::Csv).unwrap();
    let rel = relevance_ranking::<f64, &str>(&normalize_pipeline(&scores).unwrap(), "T-eval", CorrelationMetric::Kendall, None)
        .unwrap();
    let small = load_matrix::<f64>(fixture("table4_small_models.csv"), Format::Csv)
        .unwrap()
        .with_manifest(&Manifest::load(fixture("table4_groups.json")).unwrap())
        .unwrap();
    let rob = robustness_from_matrix(&small).unwrap();
    let set = select_proxies(&rel, &rob, &SelectionConfig::default()).unwrap();
    let table = load_checkpoints::<f64>(fixture("table9_checkpoints.csv"), Format::Csv).unwrap();
    let preds = predict_all(&set, &table, Aggregation::WeightedMean).unwrap();

    let read = |f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read("rel.json"), rel.to_json_string() + "\n");
    assert_eq!(read("rob.json"), rob.to_json_string() + "\n");
    assert_eq!(read("set.json"), set.to_json_string() + "\n");
    assert_eq!(read("pred.json"), serde_json::to_string_pretty(&preds).unwrap() + "\n");
}

#[test]
fn predictions_feed_rank_compare() {
    let dir = chain();
    let out = proxysel()
        .arg("rank-compare")
        .arg("--a")
        .arg(dir.path().join("pred.json"))
        .arg("--b")
        .arg(fixture("table9_rankings.csv"))
        .args(["--b-column", "T-eval"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["total_pairs"], 10.0);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(&format!("discordant pairs: {} of 10", v["discordant_pairs"].as_f64().unwrap())), "{stderr}");
}

#[test]
fn rank_compare_published_columns() {
    for (col, orientation, expected) in [("PPL", "lower", 4.0), ("V_chat", "higher", 2.0), ("V_base", "higher", 4.0), ("V_bc", "higher", 1.0)]
    {
        let text = stdout_of(
            proxysel()
                .arg("rank-compare")
                .arg("--a")
                .arg(fixture("table9_rankings.csv"))
                .arg("--b")
                .arg(fixture("table9_rankings.csv"))
                .args(["--a-column", col, "--a-orientation", orientation, "--b-column", "T-eval"]),
        );
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["discordant_pairs"], expected, "{col}");
    }
}

#[test]
fn csv_format_writes_a_table() {
    let text = stdout_of(
        proxysel()
            .args(["--format", "csv", "robustness", "--matrix"])
            .arg(fixture("table4_small_models.csv"))
            .arg("--manifest")
            .arg(fixture("table4_groups.json")),
    );
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["task", "variance_noise", "variance_data", "ratio", "degenerate"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let c3 = rows.iter().find(|r| &r[0] == "C3").unwrap();
    assert!((c3[1].parse::<f64>().unwrap() - 0.9081333333333333).abs() < 1e-12);
}

#[test]
fn normalize_emits_standardized_rows() {
    let text = stdout_of(proxysel().arg("normalize").arg("--in").arg(fixture("table4_small_models.csv")));
    let v: Value = serde_json::from_str(&text).unwrap();
    for row in v["values"].as_array().unwrap() {
        let xs: Vec<f64> = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 1e-9);
    }
}

#[test]
fn consistency_is_seeded() {
    let run = |seed: &str| {
        stdout_of(
            proxysel()
                .args(["--seed", seed, "consistency", "--baseline", "T-eval", "--n", "10", "--k", "5", "--t", "10", "--matrix"])
                .arg(fixture("leaderboard_synthetic.csv")),
        )
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn synth_reproduces_fixture() {
    let dir = tempfile::tempdir().unwrap();
    proxysel()
        .args(["--out-dir", dir.path().to_str().unwrap(), "synth", "--out", "lb.csv", "--truth", "truth.json", "--config"])
        .arg(fixture("leaderboard_synth.json"))
        .assert()
        .success();
    let same = |a: &str, b: &str| {
        assert_eq!(std::fs::read(dir.path().join(a)).unwrap(), std::fs::read(fixture(b)).unwrap(), "{a}");
    };
    same("lb.csv", "leaderboard_synthetic.csv");
    same("truth.json", "leaderboard_truth.json");
}

#[test]
fn run_all_honors_out_dir_and_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        proxysel()
            .args(["--out-dir", dir.path().to_str().unwrap(), "run-all", "--config"])
            .arg(fixture("pipeline.json"))
            .assert()
            .success();
        dir
    };
    let (a, b) = (run(), run());
    for f in ["summary.json", "proxyset.json", "consistency.json", "summary.txt", "weights.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&a.path().join("summary.json"))["baseline"], "T-eval");
}

#[test]
fn unknown_task_exits_2() {
    proxysel()
        .args(["relevance", "--baseline", "no-such-task", "--matrix"])
        .arg(fixture("leaderboard_synthetic.csv"))
        .assert()
        .code(2);
}

#[test]
fn empty_selection_exits_3() {
    let dir = chain();
    proxysel()
        .current_dir(dir.path())
        .args(["select", "--relevance", "rel.json", "--robustness", "rob.json", "--eps-c", "1.0"])
        .assert()
        .code(3);
}

#[test]
fn missing_file_exits_4() {
    proxysel().args(["normalize", "--in", "/nonexistent/scores.csv"]).assert().code(4);
    proxysel().args(["run-all", "--config", "/nonexistent/pipeline.json"]).assert().code(4);
}
