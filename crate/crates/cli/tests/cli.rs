use std::path::Path;
use std::process::{Command, Output};

fn l1o(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l1o")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_toy_writes_labelled_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.csv");
    let res = l1o(&["gen-toy", "--n", "40", "--seed", "2", "--out", path_str(&out)]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,y,label");
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn extract_then_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let res = l1o(&[
        "extract",
        "--dataset",
        "iris",
        "--out-dir",
        out,
        "--lambda1",
        "0.001",
        "--lambda-orth",
        "0.01",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for file in [
        "model.json",
        "tree.json",
        "unpruned_tree.json",
        "tree.dot",
        "rules.txt",
        "provenance.json",
    ] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let tree = dir.path().join("tree.json");
    let rules = l1o(&["export", "--tree", path_str(&tree)]);
    assert!(rules.status.success());
    assert_eq!(
        String::from_utf8(rules.stdout).unwrap(),
        std::fs::read_to_string(dir.path().join("rules.txt")).unwrap()
    );
    let dot = l1o(&["export", "--tree", path_str(&tree), "--format", "dot"]);
    assert!(String::from_utf8(dot.stdout).unwrap().starts_with("digraph tree {"));
}

#[test]
fn extract_from_saved_model_matches_training_run() {
    let dir = tempfile::tempdir().unwrap();
    let trained = dir.path().join("trained");
    let reused = dir.path().join("reused");
    assert!(l1o(&["train", "--dataset", "iris", "--out-dir", path_str(&trained)])
        .status
        .success());
    assert!(l1o(&["extract", "--dataset", "iris", "--out-dir", path_str(&trained)])
        .status
        .success());
    let model = trained.join("model.json");
    let res = l1o(&[
        "extract",
        "--dataset",
        "iris",
        "--model",
        path_str(&model),
        "--out-dir",
        path_str(&reused),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        std::fs::read_to_string(trained.join("rules.txt")).unwrap(),
        std::fs::read_to_string(reused.join("rules.txt")).unwrap()
    );
}

#[test]
fn sweep_from_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
hidden_sizes = [8]
prune = true

[dataset]
builtin = "iris"

[train]
learning_rate = 0.01
batch_size = 10
epochs = 20
seed = 0

[dt_params]
min_samples_leaf = 5

[grid]
lambda1 = [0.001, 0.01]
lambda_orth = [0.1]
norms = ["l1_norm", "none"]
"#,
    )
    .unwrap();
    let res = l1o(&[
        "sweep",
        "--config",
        path_str(&config),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 4);
    assert!(String::from_utf8(res.stdout).unwrap().contains("best:"));
}

#[test]
fn experiments_print_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let fid = l1o(&["fidelity", "--dataset", "iris", "--runs", "2", "--out-dir", out]);
    assert!(fid.status.success());
    assert!(String::from_utf8(fid.stdout).unwrap().contains("iris"));
    let con = l1o(&["consistency", "--dataset", "iris", "--sessions", "3", "--out-dir", out]);
    assert!(con.status.success());
    let base = l1o(&["baseline-dt", "--dataset", "iris", "--out-dir", out]);
    assert!(base.status.success());
    let csv = std::fs::read_to_string(dir.path().join("baseline_dt.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn csv_dataset_via_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    assert!(l1o(&["gen-toy", "--n", "120", "--out", path_str(&data)])
        .status
        .success());
    let res = l1o(&[
        "extract",
        "--dataset",
        path_str(&data),
        "--label",
        "label",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let unknown = l1o(&["train", "--dataset", "no_such.csv", "--label", "y", "--out-dir", out]);
    assert!(!unknown.status.success());
    assert!(!String::from_utf8(unknown.stderr).unwrap().is_empty());
    assert!(
        !l1o(&["train", "--dataset", "iris", "--lambda1", "-1", "--out-dir", out])
            .status
            .success()
    );
    assert!(
        !l1o(&["train", "--dataset", "iris", "--ortho-norm", "bogus", "--out-dir", out])
            .status
            .success()
    );
    assert!(!l1o(&["export", "--tree", "missing.json"]).status.success());
}
