mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::data_path;
use fblmnn::dataset::{load_csv, LabelColumn};
use fblmnn::manifest::{sha256_file, RunManifest};
use fblmnn::metric::Metric;
use fblmnn::SymMatrix;

fn fblmnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fblmnn"))
        .args(args)
        .env_remove("FBLMNN_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fblmnn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("zebra.csv");
    ok(&["generate", "zebra", "--stripes", "10", "--per-stripe", "100", "--seed", "7", "-o", s(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(text.lines().next().unwrap(), "x,y,label");
    let manifest = RunManifest::read(dir.path().join("zebra.manifest.json")).unwrap();
    assert_eq!(manifest.command, "generate zebra");
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.config["stripe_length"], 100.0);
    assert_eq!(manifest.artifacts, vec![s(&csv).to_string()]);
}

#[test]
fn generate_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    ok(&["generate", "zebra", "--seed", "3", "-o", s(&a)]);
    ok(&["generate", "zebra", "--seed", "3", "-o", s(&b)]);
    ok(&["generate", "zebra", "--seed", "4", "-o", s(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn precondition_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = fblmnn(&["generate", "zebra", "--jitter", "0.5", "-o", s(&dir.path().join("z.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("jitter"));

    let out = fblmnn(&["train", "--data", "/nonexistent.csv", "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let iris = data_path("iris.csv");
    let out = fblmnn(&["train", "--data", s(&iris), "--label-col", "4", "--mode", "sp", "--passes", "3", "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pass"));

    let out = fblmnn(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_writes_metric_report_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let iris = data_path("iris.csv");
    ok(&[
        "train", "--data", s(&iris), "--label-col", "4", "--mode", "fb", "--passes", "2",
        "--emit-weights", "--seed", "5", "-o", s(dir.path()),
    ]);
    let metric = Metric::read(dir.path().join("metric.txt")).unwrap();
    assert_eq!(metric.dim(), 4);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["solve"]["final_objective"].as_f64().unwrap().is_finite());
    let pairs = fs::read_to_string(dir.path().join("weights_pairs.csv")).unwrap();
    assert!(pairs.lines().count() > 150);
    assert!(dir.path().join("weights_triplets.csv").is_file());
    let manifest = RunManifest::read(dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, 5);
    assert_eq!(manifest.inputs[s(&iris)], sha256_file(&iris).unwrap());
    assert_eq!(manifest.config["solver"]["passes"], 2);
    assert_eq!(manifest.artifacts.len(), 4);
}

#[test]
fn eval_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let iris = data_path("iris.csv");
    ok(&[
        "eval", "--data", s(&iris), "--label-col", "4", "--methods", "knn,sp,fb", "--folds", "3",
        "--max-iter", "50", "--passes", "2", "--seed", "1", "-o", s(dir.path()),
    ]);
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("knn"));
    assert!(rows[1].starts_with("sp-lmnn"));
    assert!(rows[2].starts_with("fb-lmnn"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["fold_sizes"].as_array().unwrap().len(), 3);
    assert_eq!(report["results"][1]["solver"]["passes"], 1);
    let folds = fs::read_to_string(dir.path().join("folds.csv")).unwrap();
    assert_eq!(folds.lines().filter(|l| !l.starts_with("method")).count(), 9);
}

#[test]
fn transform_applies_the_metric_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    fs::write(&data, "x,y,label\n1,1,a\n0,3,b\n").unwrap();
    let identity = dir.path().join("identity.txt");
    Metric::identity(2).write(&identity).unwrap();
    let same = dir.path().join("same.csv");
    ok(&["transform", "--metric", s(&identity), "--data", s(&data), "--header", "-o", s(&same)]);
    let back = load_csv(&same, &LabelColumn::Name("label".into()), true).unwrap();
    assert_eq!(back.point(0), &[1.0, 1.0]);
    assert_eq!(back.point(1), &[0.0, 3.0]);

    let diag = dir.path().join("diag.txt");
    Metric::new(SymMatrix::from_diag(&[4.0, 1.0])).unwrap().write(&diag).unwrap();
    let scaled = dir.path().join("scaled.csv");
    ok(&["transform", "--metric", s(&diag), "--data", s(&data), "--header", "-o", s(&scaled)]);
    let mapped = load_csv(&scaled, &LabelColumn::Name("label".into()), true).unwrap();
    assert_eq!(mapped.point(0), &[2.0, 1.0]);
    assert_eq!(mapped.class_names(), &["a".to_string(), "b".to_string()]);
    assert!(dir.path().join("scaled.manifest.json").is_file());
}

#[test]
fn diagnose_reports_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let iris = data_path("iris.csv");
    ok(&["diagnose", "--data", s(&iris), "--label-col", "4", "--k", "3", "-o", s(dir.path())]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["mean_pair_weight"].as_f64().unwrap() > 0.0);
    let triplets = fs::read_to_string(dir.path().join("triplets.csv")).unwrap();
    assert_eq!(triplets.lines().count(), 1 + 150 * 3 * 3);
}

#[test]
fn config_file_supplies_settings_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "seed = 11\n[data]\npath = {:?}\nlabel_col = 4\n[solver]\nk = 3\npasses = 2\n",
            s(&data_path("iris.csv"))
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    ok(&["--config", s(&config), "train", "--passes", "1", "-o", s(&out_dir)]);
    let manifest = RunManifest::read(out_dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.config["solver"]["k"], 3);
    assert_eq!(manifest.config["solver"]["passes"], 1);

    fs::write(&config, "[solver]\nbogus = 1\n").unwrap();
    let out = fblmnn(&["--config", s(&config), "train", "--data", s(&data_path("iris.csv")), "-o", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_fblmnn"))
        .args(["generate", "zebra", "-o", s(&a)])
        .env("FBLMNN_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(RunManifest::read(dir.path().join("a.manifest.json")).unwrap().seed, 42);
    let b = dir.path().join("b.csv");
    ok(&["generate", "zebra", "--seed", "42", "-o", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
