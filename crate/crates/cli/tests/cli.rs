use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argfair"))
        .args(args)
        .current_dir(root())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = "configs/example.toml";
const DATA: &str = "data/example/six.csv";

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn explain_worked_example_with_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = run(&[
        "explain",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--row",
        "0",
        "--classifier",
        "ground-truth",
        "--dot",
        p(&dot),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Exp = {(race, Black)}"), "{out}");
    assert!(out.contains("(race, Black)                            0.29"));
    let dot = fs::read_to_string(dot).unwrap();
    assert_eq!(dot.matches(" [label=\"(").count(), 7);
    assert_eq!(dot.matches(" -> ").count(), 15);
}

#[test]
fn export_dot_to_stdout() {
    let o = run(&[
        "export-dot",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--row",
        "0",
        "--classifier",
        "ground-truth",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("digraph"));
    assert!(stdout(&o).contains("[label=\"5/5\"]"));
}

#[test]
fn explain_document_lists_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    let o = run(&[
        "explain",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--row",
        "0",
        "--classifier",
        "ground-truth",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["weakest"], serde_json::json!(["(race, Black)"]));
    assert_eq!(doc["arguments"].as_array().unwrap().len(), 7);
    assert_eq!(doc["attacks"].as_array().unwrap().len(), 15);
    assert_eq!(doc["config"]["k"], 5);
}

#[test]
fn row_out_of_range_names_valid_rows() {
    let o = run(&[
        "explain",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--row",
        "6",
        "--classifier",
        "ground-truth",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("valid rows are 0..=5"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_label_source_is_a_usage_error() {
    let o = run(&["audit", "--config", CONFIG, "--data", DATA]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no labels"));
}

#[test]
fn invalid_flags_are_rejected() {
    for flags in [
        ["--k", "0"],
        ["--epsilon", "0"],
        ["--max-iter", "0"],
        ["--jobs", "0"],
    ] {
        let mut args = vec![
            "audit",
            "--config",
            CONFIG,
            "--data",
            DATA,
            "--classifier",
            "ground-truth",
        ];
        args.extend(flags);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{flags:?}");
    }
    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--classifier",
        "ground-truth",
        "--polarity",
        "maybe",
    ]);
    assert!(!o.status.success());
}

#[test]
fn audit_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..3)
        .map(|i| dir.path().join(format!("r{i}.json")))
        .collect();
    let jobs = ["1", "2", "4"];
    let mut tables = Vec::new();
    for (path, jobs) in paths.iter().zip(jobs) {
        let o = run(&[
            "audit",
            "--config",
            CONFIG,
            "--data",
            DATA,
            "--classifier",
            "ground-truth",
            "--k",
            "3",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            p(path),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        tables.push(stdout(&o));
    }
    let first = fs::read(&paths[0]).unwrap();
    for path in &paths[1..] {
        assert_eq!(fs::read(path).unwrap(), first);
    }
    assert!(tables.iter().all(|t| *t == tables[0]));
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["config"]["k"], 3);
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["meta"]["labels"], "ground-truth");
    assert_eq!(doc["queried"], 1);
}

#[test]
fn empty_queried_set_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.csv");
    fs::write(&preds, "row_index,label\n0,1\n1,1\n2,1\n3,1\n4,1\n5,1\n").unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--predictions",
        p(&preds),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["queried"], 0);
    assert_eq!(doc["consistent_fraction"], 1.0);
}

#[test]
fn positive_polarity_audits_positive_rows() {
    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--classifier",
        "ground-truth",
        "--polarity",
        "pos",
        "--k",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("queried: 5"), "{}", stdout(&o));
}

#[test]
fn incomplete_predictions_name_the_missing_row() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.csv");
    fs::write(&preds, "0,-\n1,+\n2,+\n4,+\n5,+\n").unwrap();
    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--predictions",
        p(&preds),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
}

#[test]
fn bias_pipeline_flags_every_inconsistent_individual() {
    let dir = tempfile::tempdir().unwrap();
    let biased = dir.path().join("biased.csv");
    let o = run(&[
        "inject-bias",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--seed",
        "3",
        "--out",
        p(&biased),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let config = biased.with_extension("toml");
    assert!(fs::read_to_string(&config).unwrap().contains("bias-attr"));
    let out = dir.path().join("r.json");
    let o = run(&[
        "audit",
        "--config",
        p(&config),
        "--data",
        p(&biased),
        "--classifier",
        "fixed-bias",
        "--k",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    for o in doc["per_individual"].as_array().unwrap() {
        if !o["consistent"].as_bool().unwrap() {
            let weakest = o["weakest"].as_array().unwrap();
            assert!(
                weakest
                    .iter()
                    .any(|w| w["attribute"] == "bias-attr" && w["value"] == "0"),
                "{o}"
            );
        }
    }
    // A second injection into the same table is refused.
    let again = dir.path().join("again.csv");
    let o = run(&[
        "inject-bias",
        "--config",
        p(&config),
        "--data",
        p(&biased),
        "--out",
        p(&again),
    ]);
    assert!(!o.status.success());
}

#[test]
fn prepare_train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prep");
    let o = run(&[
        "prepare",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--out",
        p(&out),
        "--test-fraction",
        "0.5",
        "--seed",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("train: 3  test: 3"), "{}", stdout(&o));
    let schema = out.join("schema.toml");
    assert!(schema.exists() && out.join("train.csv").exists() && out.join("test.csv").exists());

    let model = dir.path().join("model.json");
    let o = run(&[
        "train",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--out",
        p(&model),
        "--epochs",
        "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("train accuracy"));

    let preds = dir.path().join("preds.csv");
    let o = run(&[
        "predict",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--model",
        p(&model),
        "--out",
        p(&preds),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 7);

    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--model",
        p(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "audit",
        "--config",
        CONFIG,
        "--data",
        DATA,
        "--train-data",
        DATA,
        "--epochs",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("labels=trained-model"));
}
