use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lgan(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgan"))
        .args(["--output-root", out.to_str().unwrap(), "--seed", "0"])
        .args(args)
        .env_remove("LGAN_OUTPUT_ROOT")
        .env_remove("LGAN_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status, String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run_dirs(root: &Path, group: &str) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root.join(group)).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn wl_report_pair_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stdout(&lgan(tmp.path(), &["wl-report", "--pair", "onewl_blind"]));
    assert!(out.starts_with("pair_id,"));
    assert!(out.contains("onewl_blind,6,false,false,false,true,true"), "{out}");
    let dir = &run_dirs(tmp.path(), "wl-report")[0];
    assert!(dir.join("report.csv").exists());
    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["command"], "wl-report");
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn oversized_enumeration_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lgan(tmp.path(), &["wl-report", "--enumerate", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("wl-report").exists());
    let o = lgan(tmp.path(), &["wl-report", "--pair", "no_such_pair"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn witness_matches_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out: Value = serde_json::from_str(stdout(&lgan(tmp.path(), &["witness", "--max-nodes", "7"])).trim()).unwrap();
    let fixture = read_json(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/witness7.json"));
    assert_eq!(out["g"], fixture["g"]);
    assert_eq!(out["h"], fixture["h"]);
}

#[test]
fn bench_pair_counts() {
    let tmp = tempfile::tempdir().unwrap();
    stdout(&lgan(tmp.path(), &["bench", "--dataset", "pair:onewl_blind", "--no-timing"]));
    let dir = &run_dirs(tmp.path(), "bench")[0];
    let csv = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",6,6,12,0,"), "{csv}");
    assert!(rows[1].contains(",6,6,12,6,"), "{csv}");
}

#[test]
fn train_attribute_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dataset": "synthetic:triangle", "folds": 2, "epochs": 15}"#).unwrap();
    let out_root = tmp.path().join("runs");
    let args = ["train", "--config", cfg.to_str().unwrap(), "--save-full"];
    stdout(&lgan(&out_root, &args));
    stdout(&lgan(&out_root, &args));
    let runs = run_dirs(&out_root, "synthetic_triangle");
    assert_eq!(runs.len(), 2, "reruns get distinct directories");
    let (a, b) = (read_json(&runs[0].join("report.json")), read_json(&runs[1].join("report.json")));
    assert_eq!(a, b, "same seed, same report");
    assert_eq!(a["fold_accuracies"].as_array().unwrap().len(), 2);
    for f in ["folds.csv", "timing.json", "fold0.ckpt.json", "fold1.ckpt.json", "model.json"] {
        assert!(runs[0].join(f).exists(), "{f}");
    }

    let model = runs[0].join("model.json");
    let o = lgan(
        &out_root,
        &["attribute", "--checkpoint", model.to_str().unwrap(), "--graph", "pair:triangle_flag", "--target", "1"],
    );
    stdout(&o);
    let adir = &run_dirs(&out_root, "attribute")[0];
    let dot = std::fs::read_to_string(adir.join("attribution.dot")).unwrap();
    assert!(dot.starts_with("graph"), "{dot}");
    let sidecar = read_json(&adir.join("attribution.json"));
    assert_eq!(sidecar["edges"].as_array().unwrap().len(), 8);

    let o = lgan(&out_root, &["evaluate", "--checkpoint", model.to_str().unwrap(), "--dataset", "synthetic:triangle"]);
    assert!(stdout(&o).contains("accuracy"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dataset": "synthetic:triangle", "learning_rate": 0.1}"#).unwrap();
    let o = lgan(tmp.path(), &["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning_rate"));
}

#[test]
fn missing_dataset_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lgan(tmp.path(), &["--data-root", tmp.path().to_str().unwrap(), "parse", "NOPE"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NOPE"));
}
