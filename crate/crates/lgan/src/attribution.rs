//! Integrated-Gradients edge attribution.
//!
//! Every edge `e` gets a mask `α_e` that scales each pair-embedding row
//! built from `e`, in both aggregation branches of every layer. IG walks
//! the straight path from the all-zero mask to the all-one mask and
//! averages the gradient of the target logit along it (left Riemann sum).
//! The zero mask is the same forward pass as the edgeless graph, so the
//! scores sum to approximately `F_c(graph) - F_c(edgeless graph)`.

use crate::autodiff::{AutodiffError, Tape};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::model::{GraphBatchPlan, LganModel, Mode, ModelError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MIN_STEPS: usize = 8;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("attribution needs a trained model")]
    Untrained,
    #[error("steps must be at least {MIN_STEPS}, got {0}")]
    TooFewSteps(usize),
    #[error("target class {target} out of range for {classes} classes")]
    TargetClass { target: usize, classes: usize },
    #[error("sidecar has {found} edges, graph has {expected}")]
    EdgeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

impl From<AutodiffError> for AttributionError {
    fn from(e: AutodiffError) -> Self {
        AttributionError::Model(e.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub graph_id: String,
    pub edges: Vec<(usize, usize)>,
    pub scores: Vec<f64>,
    pub predicted_class: usize,
    pub target_class: usize,
    pub baseline: String,
    pub steps: usize,
    /// Target logit with every mask at 1.
    pub full_logit: f64,
    /// Target logit with every mask at 0.
    pub baseline_logit: f64,
}

impl AttributionResult {
    /// `|Σ scores - (F(1) - F(0))| / |F(1) - F(0)|`.
    pub fn completeness_error(&self) -> f64 {
        let delta = self.full_logit - self.baseline_logit;
        (self.scores.iter().sum::<f64>() - delta).abs() / delta.abs()
    }

    /// Edge indices by descending score.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }
}

/// Integrated Gradients of the target logit with respect to the edge mask.
/// `target` defaults to the predicted class.
pub fn ig_edge_attribution(
    model: &LganModel,
    g: &Graph,
    graph_id: &str,
    target: Option<usize>,
    steps: usize,
) -> Result<AttributionResult, AttributionError> {
    if !model.is_trained() {
        return Err(AttributionError::Untrained);
    }
    if steps < MIN_STEPS {
        return Err(AttributionError::TooFewSteps(steps));
    }
    let m = g.edge_count();
    let full = model.logits(g)?;
    let predicted = Matrix::from_vec(1, full.len(), full.clone()).argmax_row(0);
    let target_class = target.unwrap_or(predicted);
    if target_class >= model.num_classes() {
        return Err(AttributionError::TargetClass { target: target_class, classes: model.num_classes() });
    }
    let baseline = model.logits_masked(g, Some(&vec![0.0; m]))?;
    let x = g.node_features().ok_or(ModelError::MissingFeatures)?;
    let plan = GraphBatchPlan::single(g);
    let mut total = vec![0.0; m];
    for k in 0..steps {
        let alpha = k as f64 / steps as f64;
        let tape = Tape::new();
        let params = model.bind(&tape, false);
        let mask = tape.param(Matrix::filled(m, 1, alpha));
        let logits = model.forward(&tape, &params, &plan, x, Some(mask), &mut Mode::Eval)?;
        let grads = tape.backward(logits.element(0, target_class)?)?;
        let grad = grads.get_or_zeros(mask);
        for (t, gv) in total.iter_mut().zip(grad.as_slice()) {
            *t += gv;
        }
    }
    // (input - baseline) is 1 for every edge
    let scores = total.into_iter().map(|s| s / steps as f64).collect();
    Ok(AttributionResult {
        graph_id: graph_id.to_string(),
        edges: g.edges().to_vec(),
        scores,
        predicted_class: predicted,
        target_class,
        baseline: "all-zero edge mask".into(),
        steps,
        full_logit: full[target_class],
        baseline_logit: baseline[target_class],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidecarEdge {
    pub u: usize,
    pub v: usize,
    pub score: f64,
    /// `|score| / max |score|`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub graph_id: String,
    pub target_class: usize,
    pub steps: usize,
    pub edges: Vec<SidecarEdge>,
    /// Set when every score is zero and the styling is uniform.
    pub warning: Option<String>,
}

/// Max-abs normalized magnitudes; all ones when every score is zero.
pub fn normalized_weights(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max == 0.0 {
        vec![1.0; scores.len()]
    } else {
        scores.iter().map(|s| s.abs() / max).collect()
    }
}

pub fn sidecar(attr: &AttributionResult) -> Sidecar {
    let weights = normalized_weights(&attr.scores);
    let all_zero = attr.scores.iter().all(|&s| s == 0.0);
    Sidecar {
        graph_id: attr.graph_id.clone(),
        target_class: attr.target_class,
        steps: attr.steps,
        edges: attr
            .edges
            .iter()
            .zip(&attr.scores)
            .zip(weights)
            .map(|((&(u, v), &score), weight)| SidecarEdge { u, v, score, weight })
            .collect(),
        warning: all_zero.then(|| "all scores are zero; edges styled uniformly".to_string()),
    }
}

/// DOT text: red for positive scores, blue for negative, with width and
/// saturation following the normalized magnitude.
pub fn to_dot(g: &Graph, attr: &AttributionResult) -> String {
    let side = sidecar(attr);
    let mut out = format!("graph \"{}\" {{\n  node [shape=circle];\n", attr.graph_id.replace('"', "'"));
    for v in 0..g.node_count() {
        writeln!(out, "  {v};").expect("write to string");
    }
    for e in &side.edges {
        let fade = (255.0 * (1.0 - e.weight)).round() as u8;
        let color = if e.score < 0.0 { format!("#{fade:02x}{fade:02x}ff") } else { format!("#ff{fade:02x}{fade:02x}") };
        writeln!(
            out,
            "  {} -- {} [weight={:.4}, penwidth={:.2}, color=\"{color}\", label=\"{:.3}\"];",
            e.u,
            e.v,
            e.weight,
            1.0 + 4.0 * e.weight,
            e.score
        )
        .expect("write to string");
    }
    out.push_str("}\n");
    out
}

/// Writes `path` (DOT) and a JSON sidecar next to it; returns the sidecar path.
pub fn export_annotated(g: &Graph, attr: &AttributionResult, path: &Path) -> Result<PathBuf, AttributionError> {
    if attr.edges.len() != g.edge_count() {
        return Err(AttributionError::EdgeMismatch { expected: g.edge_count(), found: attr.edges.len() });
    }
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| AttributionError::Io { path, source }
    };
    std::fs::write(path, to_dot(g, attr)).map_err(io(path))?;
    let json_path = path.with_extension("json");
    let body = serde_json::to_string_pretty(&sidecar(attr)).expect("sidecar serializes");
    std::fs::write(&json_path, body).map_err(io(&json_path))?;
    Ok(json_path)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, AttributionError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| AttributionError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| AttributionError::Json { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, degree_one_hot, Graph};
    use crate::model::{LganConfig, Variant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(variant: Variant, in_dim: usize, seed: u64) -> LganModel {
        let cfg = LganConfig { layers: 2, hidden_dim: 8, classifier_hidden: 8, variant, ..LganConfig::default() };
        let mut m = LganModel::new(cfg, in_dim, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        m.mark_trained();
        m
    }

    fn featured(g: Graph, max_degree: usize) -> Graph {
        let x = degree_one_hot(&g, max_degree).unwrap();
        g.with_features(x).unwrap()
    }

    #[test]
    fn single_edge_completeness() {
        let g = featured(Graph::new(3, [(0, 1)]).unwrap(), 2);
        for variant in [Variant::Plain, Variant::Residual] {
            let m = model(variant, 3, 1);
            let attr = ig_edge_attribution(&m, &g, "one", Some(1), 128).unwrap();
            let f1 = m.logits(&g).unwrap()[1];
            // the baseline is the edgeless forward with the original features
            let bare = g.edgeless().with_features(g.node_features().unwrap().clone()).unwrap();
            assert_eq!(attr.baseline_logit, m.logits(&bare).unwrap()[1]);
            let delta = f1 - attr.baseline_logit;
            assert!((attr.scores[0] - delta).abs() <= 0.02 * delta.abs(), "{} vs {delta}", attr.scores[0]);
        }
    }

    #[test]
    fn symmetric_edges_score_equally() {
        let g = featured(cycle(6), 2);
        let m = model(Variant::Plain, 3, 2);
        let attr = ig_edge_attribution(&m, &g, "c6", None, 32).unwrap();
        for s in &attr.scores {
            assert!((s - attr.scores[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_and_guarded() {
        let g = featured(cycle(5), 2);
        let m = model(Variant::Residual, 3, 3);
        let a = ig_edge_attribution(&m, &g, "c5", None, 16).unwrap();
        assert_eq!(a, ig_edge_attribution(&m, &g, "c5", None, 16).unwrap());
        assert!(matches!(ig_edge_attribution(&m, &g, "c5", None, 4), Err(AttributionError::TooFewSteps(4))));
        assert!(matches!(ig_edge_attribution(&m, &g, "c5", Some(7), 16), Err(AttributionError::TargetClass { .. })));
        let fresh = LganModel::new(m.config().clone(), 3, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(ig_edge_attribution(&fresh, &g, "c5", None, 16), Err(AttributionError::Untrained)));
    }

    fn fake(scores: Vec<f64>) -> (Graph, AttributionResult) {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let attr = AttributionResult {
            graph_id: "k3".into(),
            edges: g.edges().to_vec(),
            scores,
            predicted_class: 0,
            target_class: 0,
            baseline: "all-zero edge mask".into(),
            steps: 8,
            full_logit: 1.0,
            baseline_logit: 0.0,
        };
        (g, attr)
    }

    #[test]
    fn max_abs_scaling_keeps_sign_in_json() {
        assert_eq!(normalized_weights(&[2.0, 1.0, -1.0]), vec![1.0, 0.5, 0.5]);
        let (_, attr) = fake(vec![2.0, 1.0, -1.0]);
        let side = sidecar(&attr);
        assert_eq!(side.edges[2].score, -1.0);
        assert_eq!(side.edges[2].weight, 0.5);
        assert!(side.warning.is_none());
    }

    #[test]
    fn export_writes_styled_dot_and_round_trips_json() {
        let dir = tempfile::tempdir().unwrap();
        let (g, attr) = fake(vec![0.3, -1.0 / 7.0, 1e-9]);
        let dot = dir.path().join("k3.dot");
        let json = export_annotated(&g, &attr, &dot).unwrap();
        let text = std::fs::read_to_string(&dot).unwrap();
        assert_eq!(text.matches(" -- ").count(), 3);
        assert_eq!(text.matches("penwidth=").count(), 3);
        let back = read_sidecar(&json).unwrap();
        assert_eq!(back.edges.iter().map(|e| e.score).collect::<Vec<_>>(), attr.scores);
        assert_eq!(back.steps, 8);
    }

    #[test]
    fn all_zero_scores_export_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let (g, attr) = fake(vec![0.0; 3]);
        let json = export_annotated(&g, &attr, &dir.path().join("z.dot")).unwrap();
        let side = read_sidecar(&json).unwrap();
        assert!(side.warning.is_some());
        assert!(side.edges.iter().all(|e| e.weight == 1.0));
    }
}
