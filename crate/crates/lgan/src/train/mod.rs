//! Stratified k-fold cross-validation and the training loop.
//!
//! Each fold trains a fresh model on the other folds and reports held-out
//! accuracy at the final epoch. Fold `f` draws all its randomness from
//! stream `f + 1` of the master seed, so folds are independent and can run
//! on separate threads without changing results.

mod data;
mod report;

pub use data::{edgeless_mix_dataset, load_dataset, triangle_dataset, SYNTHETIC};
pub use report::{format_pct, mean_std, write_report, CvReport, FoldSummary};

use crate::autodiff::{adam_step, AdamConfig, AdamState, AutodiffError, Tape};
use crate::graph::{Dataset, FeatureEncoder, GraphError};
use crate::model::{stack_features, GraphBatchPlan, LganConfig, LganModel, Mode, ModelError, Readout, Variant};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::rc::Rc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("class {class} has {count} graphs, fewer than k = {k}")]
    Split { class: usize, count: usize, k: usize },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}: {msg}")]
    Divergence { epoch: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Everything needed to reproduce a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub data_root: String,
    pub layers: usize,
    pub hidden_dim: usize,
    pub variant: Variant,
    pub dropout: f64,
    pub readout: Readout,
    pub classifier_hidden: usize,
    pub lr: f64,
    /// Multiply the learning rate by `lr_decay` every `lr_step` epochs (0 disables).
    pub lr_step: usize,
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = LganConfig::default();
        ExperimentConfig {
            dataset: "MUTAG".into(),
            data_root: "data".into(),
            layers: m.layers,
            hidden_dim: m.hidden_dim,
            variant: m.variant,
            dropout: m.dropout,
            readout: m.readout,
            classifier_hidden: m.classifier_hidden,
            lr: 0.005,
            lr_step: 50,
            lr_decay: 0.5,
            epochs: 100,
            batch_size: 32,
            folds: 10,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> LganConfig {
        LganConfig {
            layers: self.layers,
            hidden_dim: self.hidden_dim,
            variant: self.variant,
            dropout: self.dropout,
            readout: self.readout,
            classifier_hidden: self.classifier_hidden,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.model().validate()?;
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(TrainError::Config("folds must be at least 2".into()));
        }
        if self.batch_size == 0 || !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config("batch_size and lr must be positive".into()));
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_step {
            0 => self.lr,
            step => self.lr * self.lr_decay.powi((epoch / step) as i32),
        }
    }
}

/// Fold id per item: each class is shuffled, then dealt round-robin.
/// The dealing position carries over between classes so total fold sizes
/// also stay within one of each other.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, TrainError> {
    if k < 2 {
        return Err(TrainError::Config("k must be at least 2".into()));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(TrainError::Split { class, count: members.len(), k });
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub test_accuracy: Option<f64>,
}

/// A trained model plus its training record.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: LganModel,
    pub encoder: FeatureEncoder,
    pub trace: Vec<EpochStats>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

/// Attaches encoder features to the whole dataset.
pub fn encode_dataset(ds: &Dataset) -> Result<(Dataset, FeatureEncoder), TrainError> {
    let enc = FeatureEncoder::for_dataset(ds);
    Ok((ds.encoded(&enc)?, enc))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fraction of `indices` whose argmax logit equals the label.
pub fn accuracy(model: &LganModel, ds: &Dataset, indices: &[usize]) -> Result<f64, TrainError> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in indices.chunks(64) {
        let graphs: Vec<_> = chunk.iter().map(|&i| &ds.graphs[i]).collect();
        let logits = model.logits_batch(&graphs)?;
        correct += chunk.iter().enumerate().filter(|&(r, &i)| logits.argmax_row(r) == ds.labels[i]).count();
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Trains on `train` (features already attached) and, when `test` is given,
/// evaluates on it after every epoch. Only `train` graphs enter any tape
/// that produces gradients.
pub fn train_model(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    encoder: &FeatureEncoder,
    train: &[usize],
    test: Option<&[usize]>,
    stream: u64,
) -> Result<TrainedModel, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::Config("empty training set".into()));
    }
    let mut rng = rng_for(cfg.seed, stream);
    let mut model = LganModel::new(cfg.model(), encoder.width(), ds.num_classes, &mut rng)?;
    let plans: Vec<GraphBatchPlan> = train.iter().map(|&i| GraphBatchPlan::single(&ds.graphs[i])).collect();
    let mut adam = AdamState::new(model.params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let opt = AdamConfig { lr: cfg.lr_at(epoch), ..AdamConfig::default() };
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let plan = GraphBatchPlan::concat(&batch.iter().map(|&j| &plans[j]).collect::<Vec<_>>());
            let graphs: Vec<_> = batch.iter().map(|&j| &ds.graphs[train[j]]).collect();
            let x = stack_features(&graphs)?;
            let labels: Rc<[usize]> = batch.iter().map(|&j| ds.labels[train[j]]).collect();
            let tape = Tape::new();
            let params = model.bind(&tape, true);
            let logits = model.forward(&tape, &params, &plan, &x, None, &mut Mode::Train(&mut rng))?;
            let loss = logits.softmax_cross_entropy(labels).map_err(ModelError::from)?;
            let value = loss.scalar();
            if !value.is_finite() {
                return Err(TrainError::Divergence { epoch, msg: format!("loss is {value}") });
            }
            loss_sum += value * batch.len() as f64;
            let grads = tape.backward(loss).map_err(ModelError::from)?;
            let grads: Vec<_> = params.iter().map(|t| grads.get_or_zeros(*t)).collect();
            adam_step(model.params_mut(), &grads, &mut adam, &opt).map_err(|e| match e {
                AutodiffError::NonFiniteGradient(_) => TrainError::Divergence { epoch, msg: e.to_string() },
                other => ModelError::from(other).into(),
            })?;
        }
        let test_accuracy = test.map(|t| accuracy(&model, ds, t)).transpose()?;
        trace.push(EpochStats { epoch, loss: loss_sum / train.len() as f64, test_accuracy });
    }
    model.mark_trained();
    let train_accuracy = accuracy(&model, ds, train)?;
    let test_accuracy = trace.last().and_then(|s| s.test_accuracy);
    Ok(TrainedModel { model, encoder: encoder.clone(), trace, train_accuracy, test_accuracy })
}

/// Trains on every fold but `fold` and tests on `fold`.
pub fn train_fold(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    encoder: &FeatureEncoder,
    assignment: &[usize],
    fold: usize,
) -> Result<(FoldSummary, TrainedModel), TrainError> {
    if fold >= cfg.folds {
        return Err(TrainError::Config(format!("fold {fold} out of range for {} folds", cfg.folds)));
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assignment[i] == fold);
    let start = Instant::now();
    let trained = train_model(cfg, ds, encoder, &train, Some(&test), fold as u64 + 1)?;
    let summary = FoldSummary {
        fold,
        test_size: test.len(),
        test_accuracy: trained.test_accuracy.unwrap_or(0.0),
        train_accuracy: trained.train_accuracy,
        final_loss: trained.trace.last().map_or(f64::NAN, |s| s.loss),
        epochs: trained.trace.clone(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((summary, trained))
}

/// Runs every fold (up to `jobs` at a time) and aggregates. A failing fold
/// does not stop the others; the report then carries the completed folds
/// and the first error.
pub fn cross_validate(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    jobs: usize,
) -> Result<(CvReport, Vec<Option<TrainedModel>>), TrainError> {
    cfg.validate()?;
    let (encoded, encoder) = encode_dataset(ds)?;
    let assignment = stratified_kfold(&ds.labels, cfg.folds, cfg.seed)?;
    let run = |fold: usize| train_fold(cfg, &encoded, &encoder, &assignment, fold);
    let results: Vec<Result<(FoldSummary, TrainedModel), TrainError>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| TrainError::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..cfg.folds).into_par_iter().map(run).collect())
    } else {
        (0..cfg.folds).map(run).collect()
    };
    let mut folds = Vec::new();
    let mut models = Vec::new();
    let mut error = None;
    for (fold, r) in results.into_iter().enumerate() {
        match r {
            Ok((summary, model)) => {
                folds.push(summary);
                models.push(Some(model));
            }
            Err(e) => {
                error.get_or_insert_with(|| format!("fold {fold}: {e}"));
                models.push(None);
            }
        }
    }
    Ok((CvReport::new(cfg.clone(), ds.name.clone(), folds, error), models))
}

#[cfg(test)]
mod tests;
