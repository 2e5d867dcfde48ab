use super::*;
use crate::graph::{complete, cycle, path, star, Graph};
use std::path::PathBuf;

fn data_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn quick(folds: usize) -> ExperimentConfig {
    ExperimentConfig {
        layers: 2,
        hidden_dim: 8,
        classifier_hidden: 8,
        epochs: 5,
        batch_size: 4,
        folds,
        seed: 3,
        ..ExperimentConfig::default()
    }
}

fn toy() -> Dataset {
    let graphs = vec![cycle(4), path(4), cycle(5), path(5), complete(4), star(3), cycle(6), path(6)];
    Dataset::new("toy", graphs, vec![1, 0, 1, 0, 1, 0, 1, 0])
}

#[test]
fn balanced_folds_get_one_of_each_class() {
    let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
    let folds = stratified_kfold(&labels, 5, 11).unwrap();
    for f in 0..5 {
        let members: Vec<usize> = (0..10).filter(|&i| folds[i] == f).map(|i| labels[i]).collect();
        assert_eq!(members.len(), 2);
        assert!(members.contains(&0) && members.contains(&1));
    }
    assert_eq!(folds, stratified_kfold(&labels, 5, 11).unwrap());
}

#[test]
fn small_class_is_a_split_error() {
    let labels = [0, 0, 0, 0, 1, 1];
    let err = stratified_kfold(&labels, 3, 0).unwrap_err();
    assert!(matches!(err, TrainError::Split { class: 1, count: 2, k: 3 }), "{err}");
}

#[test]
fn mutag_folds_contain_both_classes() {
    let ds = load_dataset("MUTAG", &data_root(), 0).unwrap();
    assert_eq!(ds.len(), 188);
    assert_eq!(ds.class_counts(), vec![63, 125]);
    let folds = stratified_kfold(&ds.labels, 10, 0).unwrap();
    for f in 0..10 {
        let mut seen = [0usize; 2];
        for i in (0..ds.len()).filter(|&i| folds[i] == f) {
            seen[ds.labels[i]] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0, "fold {f}: {seen:?}");
        assert!(seen[0].abs_diff(63 / 10) <= 1 && seen[1].abs_diff(125 / 10) <= 1);
    }
}

#[test]
fn zero_epochs_and_one_fold_are_rejected() {
    let cfg = ExperimentConfig { epochs: 0, ..quick(2) };
    assert!(matches!(cross_validate(&cfg, &toy(), 1), Err(TrainError::Config(_))));
    assert!(matches!(cross_validate(&quick(1), &toy(), 1), Err(TrainError::Config(_))));
}

#[test]
fn two_folds_on_a_toy_set() {
    let ds = Dataset::new("four", vec![cycle(4), path(4), cycle(5), path(5)], vec![1, 0, 1, 0]);
    let (report, models) = cross_validate(&quick(2), &ds, 1).unwrap();
    assert_eq!(report.folds.len(), 2);
    assert_eq!(models.len(), 2);
    assert!(report.error.is_none());
    assert_eq!(report.folds_csv().lines().count(), 3);
    let (m, s) = mean_std(&report.fold_accuracies);
    assert!((m - report.mean).abs() < 1e-12 && (s - report.std).abs() < 1e-12);
}

#[test]
fn constant_labels_are_learned_perfectly() {
    let ds = Dataset::new("const", toy().graphs, vec![0; 8]);
    let cfg = ExperimentConfig { epochs: 20, ..quick(2) };
    let (report, _) = cross_validate(&cfg, &ds, 1).unwrap();
    assert_eq!(report.fold_accuracies, vec![1.0, 1.0]);
}

#[test]
fn reruns_and_parallel_folds_are_identical() {
    let cfg = quick(2);
    let (a, _) = cross_validate(&cfg, &toy(), 1).unwrap();
    let (b, _) = cross_validate(&cfg, &toy(), 1).unwrap();
    let (c, _) = cross_validate(&cfg, &toy(), 2).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
}

#[test]
fn std_agrees_with_an_online_oracle() {
    let values = [0.8, 0.9, 0.85, 0.7, 1.0, 0.95, 0.75];
    // Welford's single-pass recurrence
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in &values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let (m, s) = mean_std(&values);
    assert!((m - mean).abs() < 1e-12);
    assert!((s - (m2 / n).sqrt()).abs() < 1e-12);
    assert_eq!(format_pct(0.925, 0.063), "92.5 ± 6.3");
}

#[test]
fn test_graphs_never_touch_training() {
    let ds = toy();
    let (encoded, enc) = encode_dataset(&ds).unwrap();
    let train: Vec<usize> = (0..6).collect();
    let a = train_model(&quick(2), &encoded, &enc, &train, None, 1).unwrap();
    // scramble the held-out graphs entirely
    let mut other = encoded.clone();
    for i in 6..8 {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        other.graphs[i] = g.with_features(crate::matrix::Matrix::filled(3, enc.width(), 9.0)).unwrap();
    }
    let b = train_model(&quick(2), &other, &enc, &train, Some(&[6, 7]), 1).unwrap();
    assert_eq!(a.model.params(), b.model.params());
}

#[test]
fn huge_learning_rate_diverges_with_epoch() {
    let cfg = ExperimentConfig { lr: 1e300, lr_step: 0, epochs: 4, ..quick(2) };
    let (encoded, enc) = encode_dataset(&toy()).unwrap();
    let err = train_model(&cfg, &encoded, &enc, &[0, 1, 2, 3, 4, 5], None, 1).unwrap_err();
    assert!(matches!(err, TrainError::Divergence { .. }), "{err}");
}

#[test]
fn report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (report, _) = cross_validate(&quick(2), &toy(), 1).unwrap();
    write_report(&report, dir.path()).unwrap();
    for f in ["report.json", "folds.csv", "timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let back: CvReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back.fold_accuracies, report.fold_accuracies);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(!text.contains("seconds"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let bad = serde_json::from_str::<ExperimentConfig>(r#"{"epochs": 3, "learning_rate": 0.1}"#);
    assert!(bad.is_err());
    let ok: ExperimentConfig = serde_json::from_str(r#"{"epochs": 3, "variant": "residual"}"#).unwrap();
    assert_eq!(ok.variant, Variant::Residual);
    assert_eq!(ok.folds, 10);
}

#[test]
fn synthetic_datasets_resolve() {
    let tri = load_dataset("synthetic:triangle", &data_root(), 1).unwrap();
    assert_eq!(tri.class_counts(), vec![60, 60]);
    let mix = load_dataset("synthetic:edgeless_mix", &data_root(), 1).unwrap();
    assert!(mix.graphs.iter().any(|g| g.edge_count() == 0));
    assert!(load_dataset("synthetic:nope", &data_root(), 1).is_err());
}
