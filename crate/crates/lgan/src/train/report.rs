use super::{EpochStats, ExperimentConfig, TrainError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub test_size: usize,
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    pub final_loss: f64,
    pub epochs: Vec<EpochStats>,
    /// Wall-clock time; kept out of `report.json` so reruns compare equal.
    #[serde(skip)]
    pub seconds: f64,
}

/// Aggregated cross-validation result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub config: ExperimentConfig,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    /// `mean ± std` in percent with one decimal.
    pub summary: String,
    pub folds: Vec<FoldSummary>,
    pub error: Option<String>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn format_pct(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", 100.0 * mean, 100.0 * std)
}

impl CvReport {
    pub fn new(config: ExperimentConfig, dataset: String, folds: Vec<FoldSummary>, error: Option<String>) -> Self {
        let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
        let (mean, std) = mean_std(&fold_accuracies);
        CvReport { dataset, config, summary: format_pct(mean, std), fold_accuracies, mean, std, folds, error }
    }

    pub fn folds_csv(&self) -> String {
        let mut out = String::from("fold,test_size,test_accuracy,train_accuracy,final_loss\n");
        for f in &self.folds {
            writeln!(out, "{},{},{},{},{}", f.fold, f.test_size, f.test_accuracy, f.train_accuracy, f.final_loss)
                .expect("write to string");
        }
        out
    }

    pub fn timing_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fold_seconds": self.folds.iter().map(|f| f.seconds).collect::<Vec<_>>(),
            "total_seconds": self.folds.iter().map(|f| f.seconds).sum::<f64>(),
        })
    }
}

/// Writes `report.json`, `folds.csv` and `timing.json` into `dir`.
pub fn write_report(report: &CvReport, dir: &Path) -> Result<(), TrainError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| TrainError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let files = [
        ("report.json", serde_json::to_string_pretty(report).expect("report serializes")),
        ("folds.csv", report.folds_csv()),
        ("timing.json", serde_json::to_string_pretty(&report.timing_json()).expect("timing serializes")),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}
