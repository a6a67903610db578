use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tutorloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tutorloop"))
        .args(args)
        .current_dir(root())
        .env_remove("TUTOR_CONFIG")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = tutorloop(&all);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn math_check_reads_the_ambiguous_product() {
    let v = json(&["math", "check", "--attempt", "(x+5)y", "--expected", "y(x+5)"]);
    assert_eq!(v["verdict"], "Equivalent");
    let v = json(&["math", "check", "--attempt", "y(x+6)", "--expected", "y(x+5)"]);
    assert_eq!(v["verdict"], "Different");
    let out = tutorloop(&["math", "check", "--attempt", "x +", "--expected", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[math_hints."));
}

#[test]
fn grade_and_hint() {
    let v = json(&[
        "grade",
        "--exercise-id",
        "ml-overfit",
        "--answer",
        "A model is underfitting when it has a high bias.",
    ]);
    assert_eq!(v["grade"], "Correct");
    let v = json(&[
        "grade",
        "--exercise-id",
        "ml-overfit",
        "--answer",
        "It memorizes noise.",
    ]);
    assert_eq!(v["grade"], "Incorrect");
    let v = json(&["grade", "--exercise-id", "alg-product", "--answer", "(x+5)y", "--latex"]);
    assert_eq!(v["grade"], "Correct");
    let v = json(&["hint", "--exercise-id", "ml-overfit"]);
    assert_eq!(v[0]["text"], "Think about the case when it has a high bias.");
    let out = tutorloop(&["hint", "--exercise-id", "ml-overfit"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Think about the case when it has a high bias."));
}

#[test]
fn errors_carry_codes_and_exit_status() {
    let out = tutorloop(&["grade", "--exercise-id", "nope", "--answer", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[tutoring_core.unknown_exercise]"));

    let out = tutorloop(&["--json", "grade", "--exercise-id", "nope", "--answer", "x"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["code"], "tutoring_core.unknown_exercise");

    assert_eq!(tutorloop(&["simulate", "--students", "0"]).status.code(), Some(2));
    assert_eq!(tutorloop(&["report"]).status.code(), Some(2));
    assert_eq!(tutorloop(&["serve"]).status.code(), Some(2));
    let out = tutorloop(&["cv", "--folds", "50", "--synthetic", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feedback_models."));
    let out = tutorloop(&["train", "--tier", "deep", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_on_the_gains_fixture() {
    let log = root().join("crates/cli/tests/fixtures/gains.jsonl");
    let v = json(&["report", "--log", path(&log)]);
    let cells: Vec<(u64, u64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| [&r["all_attempts"], &r["before_second_attempt"]])
        .map(|c| (c["successes"].as_u64().unwrap(), c["trials"].as_u64().unwrap()))
        .collect();
    assert_eq!(cells, vec![(15, 38), (11, 29), (20, 43), (18, 35), (33, 68), (26, 43)]);
    let text = String::from_utf8(tutorloop(&["report", "--log", path(&log)]).stdout).unwrap();
    assert!(text.contains("60.47% [ 44.41%,  75.02%] (26/43)"), "{text}");
    assert!(text.contains("Deep vs Baseline (Before Second Attempt): z = 1.8763, p one-tailed = 0.03031"));
}

#[test]
fn train_is_reproducible_and_feeds_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        json(&[
            "train",
            "--tier",
            "deep",
            "--synthetic",
            "150",
            "--trees",
            "7",
            "--seed",
            "3",
            "--out",
            path(out),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let model: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(model["metadata"]["trained_at"], "2023-11-14T22:13:20Z");

    let shallow = dir.path().join("shallow.json");
    let v = json(&[
        "train",
        "--tier",
        "shallow",
        "--synthetic",
        "150",
        "--classifier",
        "tree",
        "--smote",
        "1",
        "--out",
        path(&shallow),
    ]);
    assert_eq!(v["tier"], "Shallow");
    assert!(v["examples"].as_u64().unwrap() > 150);

    let log = dir.path().join("log.jsonl");
    let out = tutorloop(&[
        "simulate",
        "--students",
        "5",
        "--seed",
        "2",
        "--model",
        path(&a),
        "--model",
        path(&shallow),
        "--out",
        path(&log),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&["report", "--log", path(&log)]);
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);

    // a log labels its own interventions for retraining
    let v = json(&[
        "train",
        "--tier",
        "deep",
        "--log",
        path(&log),
        "--trees",
        "3",
        "--out",
        path(&b),
    ]);
    assert!(v["examples"].as_u64().unwrap() > 0);

    // a missing model file is an error
    let out = tutorloop(&["simulate", "--students", "1", "--model", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_to_stdout_is_deterministic() {
    let a = tutorloop(&["simulate", "--students", "3", "--seed", "9", "--cohort", "null"]);
    let b = tutorloop(&["simulate", "--students", "3", "--seed", "9", "--cohort", "null"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut lines = a.stdout.split(|&c| c == b'\n');
    let header: Value = serde_json::from_slice(lines.next().unwrap()).unwrap();
    assert_eq!(header["schema"], "interactions/1");
    let first: Value = serde_json::from_slice(lines.next().unwrap()).unwrap();
    assert_eq!(first["kind"], "turn");
}

#[test]
fn ingest_wiki_writes_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wiki.json");
    let v = json(&[
        "ingest-wiki",
        "--corpus",
        "data/wiki.jsonl",
        "--synonyms",
        "data/synonyms.json",
        "--out",
        path(&out),
    ]);
    assert_eq!(v["articles"], 12);
    assert_eq!(v["skipped"], 1);
    let model: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(model["schema"].is_object());
}

#[test]
fn serve_config_from_environment_wins() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        format!(
            r#"{{"bind": "127.0.0.1:0", "bank": "{}", "log": "log.jsonl"}}"#,
            root().join("data/bank.jsonl").display()
        ),
    )
    .unwrap();
    let missing = dir.path().join("missing.json");
    let out = Command::new(env!("CARGO_BIN_EXE_tutorloop"))
        .args(["serve", "--config", path(&good)])
        .env("TUTOR_CONFIG", &missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.starts_with("error[interface.config]") && err.contains("missing.json"),
        "{err}"
    );
}
