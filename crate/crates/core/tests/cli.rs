use std::path::Path;
use std::process::{Command, Output};

use fallrisk::cli::RunManifest;
use fallrisk::solver::ScoreModel;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fallrisk"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap()
}

fn prepare(dir: &Path) {
    ok(dir, &["synth", "--out", "synth", "--n", "2500", "--seed", "3"]);
    ok(dir, &["label", "--input", "synth/encounters.jsonl", "--out", "label"]);
    ok(dir, &["features", "--cohort", "label", "--out", "features", "--augmented"]);
}

#[test]
fn fit_writes_a_feasible_model() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    ok(tmp.path(), &["fit", "--features", "features", "--lambda", "0.5", "--out", "fit"]);
    let model = ScoreModel::read_json(std::fs::File::open(tmp.path().join("fit/model.json")).unwrap()).unwrap();
    let beta = model.beta();
    assert!(beta.iter().all(|&b| b >= -1e-8));
    let constraints = model.constraint_set().unwrap();
    assert!(constraints.max_violation(beta.view()) <= 1e-8);
    assert!(model.fit.as_ref().unwrap().converged);

    let scored = std::fs::read_to_string(tmp.path().join("fit/scored.csv")).unwrap();
    assert!(scored.starts_with("id,score,category,feature_1,contribution_1"));
}

#[test]
fn every_stage_leaves_one_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    ok(tmp.path(), &["eval", "--cohort", "label", "--out", "eval", "--folds", "3", "--seed", "2"]);
    ok(tmp.path(), &["report", "--eval", "eval", "--out", "report"]);
    for stage in ["synth", "label", "features", "eval", "report"] {
        let dir = tmp.path().join(stage);
        let manifests = std::fs::read_dir(&dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains("manifest"))
            .count();
        assert_eq!(manifests, 1, "{stage}");
        let m: RunManifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.command, stage);
        assert_eq!(m.config_hash.len(), 64);
        for o in &m.outputs {
            assert!(dir.join(&o.path).is_file(), "{stage}/{}", o.path);
        }
        // no temporary files survive
        assert!(std::fs::read_dir(&dir).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
    }
    for name in ["roc.svg", "pr.svg", "differential.svg", "roc.csv", "pr.csv", "concordance.csv", "summary.json"] {
        assert!(tmp.path().join("report").join(name).is_file(), "{name}");
    }
    let svg = std::fs::read_to_string(tmp.path().join("report/roc.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn empty_input_is_a_validation_failure() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.jsonl"), "").unwrap();
    let out = run(tmp.path(), &["label", "--input", "empty.jsonl", "--out", "label"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["exit_code"], 2);
}

#[test]
fn malformed_lines_are_validation_failures() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.jsonl"), "{\"id\": 3}\n").unwrap();
    let out = run(tmp.path(), &["label", "--input", "bad.jsonl", "--out", "label"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["message"].as_str().unwrap().contains("line 1"));
}

#[test]
fn missing_input_is_an_io_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["label", "--input", "absent.jsonl", "--out", "label"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"], "io");
}

#[test]
fn iteration_cap_is_a_convergence_failure() {
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    let out = run(tmp.path(), &["fit", "--features", "features", "--out", "fit", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "not_converged");
    // the partial model is still written for inspection
    assert!(tmp.path().join("fit/model.json").is_file());
}

#[test]
fn bad_flags_are_validation_failures() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &["fit", "--lambda", "x"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["frobnicate"]).status.code(), Some(2));
    prepare(tmp.path());
    let out = run(tmp.path(), &["fit", "--features", "features", "--out", "fit", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_counts_per_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["synth", "--out", "synth", "--n", "2500"]);
    ok(tmp.path(), &["sweep", "--input", "synth/encounters.jsonl", "--out", "sweep", "--thresholds", "4,6,8", "--folds", "3"]);
    let counts = std::fs::read_to_string(tmp.path().join("sweep/sweep_counts.csv")).unwrap();
    let highs: Vec<usize> = counts.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(highs.len(), 3);
    assert!(highs.windows(2).all(|w| w[1] <= w[0]));
}
