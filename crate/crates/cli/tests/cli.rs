use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn topoeeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoeeg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = topoeeg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    topoeeg(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: [&str; 14] = [
    "--subjects", "8", "--patients", "4", "--duration", "12", "--folds", "2", "--model", "concat", "--classifier",
    "knn", "--knn-k", "1",
];

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_a_reproducible_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let stdout = ok(&["synth", "--out", p(out), "--subjects", "6", "--patients", "3", "--duration", "6", "--seed", "7"]);
        assert!(stdout.contains("6 subjects (3 patients, 3 controls)"));
    }
    let manifest = fs::read_to_string(a.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 7);
    assert_eq!(manifest, fs::read_to_string(b.join("manifest.csv")).unwrap());
    for id in 0..6 {
        let rel = format!("subjects/sub-{id:03}.csv");
        assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap());
    }
    assert_eq!(json(&a.join("config.json"))["cohort"]["spec"]["seed"], 7);
}

#[test]
fn synth_rejects_more_patients_than_subjects() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["synth", "--out", p(dir.path()), "--subjects", "64", "--patients", "65"]), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    assert_eq!(code(&["cv", "--out", out, "--classifier", "bogus"]), 1);
    assert_eq!(code(&["cv", "--out", out, "--no-such-flag"]), 1);
    assert_eq!(code(&["cv", "--out", out, "--interp", "bilinear"]), 1);
    assert_eq!(code(&["cv", "--out", out, "--subject-threshold", "1.5"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn missing_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    assert_eq!(code(&["cv", "--out", out, "--manifest", "/nonexistent/manifest.csv"]), 2);
    assert_eq!(code(&["report", "/nonexistent/report.json"]), 2);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_topoeeg"))
        .args(["cv", "--out", p(dir.path())])
        .env("TOPOEEG_THREADS", "zero")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn cv_reports_are_reproducible_from_flags_and_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["cv", "--out", p(&out)];
        args.extend_from_slice(extra);
        let stdout = ok(&args);
        assert!(stdout.contains("concat  knn"));
        out
    };
    let a = run("a", &SMALL);
    for file in ["config.json", "report.json", "report.txt", "subjects.csv"] {
        assert!(a.join(file).exists(), "{file}");
    }
    let report = json(&a.join("report.json"));
    assert_eq!(report["cohort"]["subjects"], 8);
    let pooled = &report["pooled"];
    let total: u64 = ["tp", "fn", "fp", "tn"].iter().map(|k| pooled[k].as_u64().unwrap()).sum();
    assert_eq!(total, 8);

    let b = run("b", &SMALL);
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(fs::read(a.join("subjects.csv")).unwrap(), fs::read(b.join("subjects.csv")).unwrap());

    let config = a.join("config.json");
    let c = run("c", &["--config", p(&config)]);
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(c.join("report.json")).unwrap());

    let text = ok(&["report", p(&a.join("report.json"))]);
    assert_eq!(text, fs::read_to_string(a.join("report.txt")).unwrap());
    let csv = ok(&["report", "--subjects", p(&a.join("report.json"))]);
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn cached_features_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let mut args = vec!["cv", "--cache-dir", p(&cache)];
    args.extend_from_slice(&SMALL);
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let with_out = |out: &Path| {
        let mut a = args.clone();
        a.extend_from_slice(&["--out", p(out)]);
        topoeeg(&a)
    };
    let o1 = with_out(&first);
    assert!(String::from_utf8_lossy(&o1.stderr).contains("extracting"));
    let o2 = with_out(&second);
    assert!(String::from_utf8_lossy(&o2.stderr).contains("cached"));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    assert_eq!(fs::read(first.join("report.json")).unwrap(), fs::read(second.join("report.json")).unwrap());
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let mut args = vec!["cv", "--out", p(&out)];
        args.extend_from_slice(&SMALL);
        let status = Command::new(env!("CARGO_BIN_EXE_topoeeg"))
            .args(&args)
            .env("TOPOEEG_THREADS", threads)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        outputs.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn cv_on_a_synthesized_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = dir.path().join("cohort");
    ok(&["synth", "--out", p(&cohort), "--subjects", "6", "--patients", "3", "--duration", "6"]);
    let out = dir.path().join("cv");
    let manifest = cohort.join("manifest.csv");
    ok(&[
        "cv", "--out", p(&out), "--manifest", p(&manifest), "--folds", "3", "--model", "concat", "--classifier", "knn",
        "--knn-k", "1",
    ]);
    let config = json(&out.join("config.json"));
    assert_eq!(config["cohort"]["kind"], "manifest");
    assert_eq!(json(&out.join("report.json"))["cohort"]["subjects"], 6);
    assert_eq!(code(&["cv", "--out", p(&out), "--manifest", p(&manifest), "--fs", "512"]), 2);
    assert_eq!(code(&["cv", "--out", p(&out), "--manifest", p(&manifest), "--energy-ratio", "2"]), 1);
}

#[test]
fn featurize_writes_energies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    let stdout = ok(&["featurize", "--out", p(&out), "--subjects", "4", "--patients", "2", "--duration", "11"]);
    assert!(stdout.starts_with("8 windows from 4 subjects"));
    let dump = fs::read_to_string(out.join("features.csv")).unwrap();
    let mut lines = dump.lines();
    assert!(lines.next().unwrap().starts_with("# topoeeg-features "));
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 34 * 5);
    assert_eq!(lines.count(), 8);
}

#[test]
fn interp_compare_builds_one_row_per_method_and_d_max() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ic");
    let mut args = vec!["interp-compare", "--out", p(&out), "--methods", "idw-nn,nearest", "--d-max-list", "2,4"];
    args.extend_from_slice(&SMALL);
    let table = ok(&args);
    let comparison = json(&out.join("comparison.json"));
    let rows = comparison["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["model"] == "grid"));
    assert_eq!(rows[0]["interp"], "idw-nn");
    assert_eq!(rows[1]["d_max"], 4.0);
    assert_eq!(rows[2]["interp"], "nearest");
    assert_eq!(table.lines().count(), 5);
    for run in ["idw-nn_d2", "idw-nn_d4", "nearest_d2", "nearest_d4"] {
        let report = json(&out.join("runs").join(run).join("report.json"));
        assert_eq!(report["folds"], comparison["folds"]);
    }

    let all = dir.path().join("all");
    let mut args = vec!["interp-compare", "--out", p(&all)];
    args.extend_from_slice(&SMALL);
    ok(&args);
    assert_eq!(json(&all.join("comparison.json"))["rows"].as_array().unwrap().len(), 5);

    assert_eq!(code(&["interp-compare", "--out", p(&out), "--methods", ""]), 1);
    assert_eq!(code(&["interp-compare", "--out", p(&out), "--methods", "idw-nn,bicubic"]), 1);
}

#[test]
fn stride_compare_covers_the_four_strides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sc");
    let mut args = vec!["stride-compare", "--out", p(&out)];
    args.extend_from_slice(&SMALL);
    ok(&args);
    let comparison = json(&out.join("comparison.json"));
    let strides: Vec<u64> = comparison["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["window_stride"].as_u64().unwrap())
        .collect();
    assert_eq!(strides, vec![1280, 2560, 5120, 7680]);

    // 12 s at 1024 Hz is 12288 samples: shorter than 5120 + 7680.
    let windows = |stride: u64| json(&out.join("runs").join(format!("stride_{stride}")).join("report.json"))["cohort"]["windows"].as_u64().unwrap();
    assert_eq!(windows(7680), 8);
    assert_eq!(windows(5120), 16);
    assert_eq!(windows(1280), 8 * 6);

    let cv = dir.path().join("cv");
    let mut args = vec!["cv", "--out", p(&cv)];
    args.extend_from_slice(&SMALL);
    ok(&args);
    assert_eq!(
        fs::read(cv.join("report.json")).unwrap(),
        fs::read(out.join("runs/stride_5120/report.json")).unwrap()
    );

    let text = ok(&["report", p(&out.join("comparison.json"))]);
    assert!(text.starts_with("stride-compare (seed 7)"));
}

#[test]
fn diverging_training_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = topoeeg(&[
        "cv", "--out", p(dir.path()), "--subjects", "8", "--patients", "4", "--duration", "12", "--folds", "2",
        "--model", "concat", "--max-epochs", "2", "--patience", "1", "--learning-rate", "1e30",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}
