//! The trainable line-graph aggregation network.
//!
//! Each layer sums pair embeddings `h_u + h_v` over two index lists per
//! target node (see [`GraphBatchPlan`]), transforms both sums with branch
//! MLPs and fuses them. The plain variant fuses with `φ(concat(a, b))`; the
//! residual variant computes `z = ψ(concat(a, b))` and outputs
//! `φ'(W·h + z)`. `φ` and `φ'` are two-layer MLPs followed by a ReLU. In the residual variant the branch MLPs and `ψ` carry no
//! biases, so a node with an empty ego edge set (or a fully masked one) gets
//! `z = 0` exactly and the update is `φ'(W·h)`.

mod plan;

pub use plan::{message_counts, GraphBatchPlan};

use crate::autodiff::{AutodiffError, ParamStore, Tape, Tensor};
use crate::graph::{FeatureEncoder, Graph};
use crate::matrix::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("graph {0} has no nodes; readout is undefined")]
    EmptyGraph(usize),
    #[error("graph has no node features; encode the dataset first")]
    MissingFeatures,
    #[error("feature matrix is {got:?}, expected {expected:?}")]
    FeatureShape { expected: (usize, usize), got: (usize, usize) },
    #[error("edge mask has {got} entries, graph has {expected} edges")]
    MaskLength { expected: usize, got: usize },
    #[error("model parameters are untrained; train or load a checkpoint first")]
    Untrained,
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Residual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Sum,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LganConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub variant: Variant,
    pub dropout: f64,
    pub readout: Readout,
    pub classifier_hidden: usize,
}

impl Default for LganConfig {
    fn default() -> Self {
        LganConfig {
            layers: 2,
            hidden_dim: 16,
            variant: Variant::Plain,
            dropout: 0.0,
            readout: Readout::Sum,
            classifier_hidden: 32,
        }
    }
}

impl LganConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers == 0 || self.hidden_dim == 0 || self.classifier_hidden == 0 {
            return Err(ModelError::Config("layers, hidden_dim and classifier_hidden must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

/// Whether dropout is active.
pub enum Mode<'r> {
    Eval,
    Train(&'r mut ChaCha8Rng),
}

#[derive(Clone, Debug)]
struct Linear {
    w: usize,
    b: Option<usize>,
}

/// Two linear maps with a ReLU (and dropout) in between.
#[derive(Clone, Debug)]
struct Mlp {
    first: Linear,
    second: Linear,
}

#[derive(Clone, Debug)]
struct LayerParams {
    branch_t: Mlp,
    branch_n: Mlp,
    /// `φ` for the plain variant, `ψ` for the residual one.
    fuse: Mlp,
    proj: Option<usize>,
    post: Option<Mlp>,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect())
}

fn linear(store: &mut ParamStore, name: &str, i: usize, o: usize, bias: bool, rng: &mut impl Rng) -> Linear {
    let w = store.add(format!("{name}.w"), glorot(i, o, rng));
    let b = bias.then(|| store.add(format!("{name}.b"), Matrix::zeros(1, o)));
    Linear { w, b }
}

fn mlp(store: &mut ParamStore, name: &str, dims: [usize; 3], bias: bool, rng: &mut impl Rng) -> Mlp {
    Mlp {
        first: linear(store, &format!("{name}.0"), dims[0], dims[1], bias, rng),
        second: linear(store, &format!("{name}.1"), dims[1], dims[2], bias, rng),
    }
}

impl Linear {
    fn apply<'t>(&self, x: Tensor<'t>, p: &[Tensor<'t>]) -> Result<Tensor<'t>, AutodiffError> {
        let y = x.matmul(&p[self.w])?;
        match self.b {
            Some(b) => y.add_row(&p[b]),
            None => Ok(y),
        }
    }
}

impl Mlp {
    fn apply<'t>(
        &self,
        x: Tensor<'t>,
        p: &[Tensor<'t>],
        dropout: f64,
        mode: &mut Mode,
    ) -> Result<Tensor<'t>, AutodiffError> {
        let hidden = self.first.apply(x, p)?.relu();
        let hidden = apply_dropout(hidden, dropout, mode)?;
        self.second.apply(hidden, p)
    }
}

/// Inverted dropout; identity in eval mode or at rate 0.
fn apply_dropout<'t>(x: Tensor<'t>, rate: f64, mode: &mut Mode) -> Result<Tensor<'t>, AutodiffError> {
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let (r, c) = x.shape();
            let keep = 1.0 / (1.0 - rate);
            let mask = (0..r * c).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect();
            x.mul_const(Rc::new(Matrix::from_vec(r, c, mask)))
        }
        _ => Ok(x),
    }
}

/// Row for pair `{us[e], vs[e]}` is `h[us[e]] + h[vs[e]]`.
pub fn pair_embed<'t>(h: Tensor<'t>, us: Rc<[usize]>, vs: Rc<[usize]>) -> Result<Tensor<'t>, AutodiffError> {
    h.row_select(us)?.add(&h.row_select(vs)?)
}

/// The two per-target multiset sums: over target–neighbor pairs and over
/// neighbor–neighbor pairs. Targets with an empty list get zero rows.
/// `mask`, when given, is a `pairs x 1` column scaling every pair row.
pub fn dual_aggregate<'t>(
    h: Tensor<'t>,
    plan: &GraphBatchPlan,
    mask: Option<Tensor<'t>>,
) -> Result<(Tensor<'t>, Tensor<'t>), AutodiffError> {
    let mut pairs = pair_embed(h, GraphBatchPlan::rc(&plan.us), GraphBatchPlan::rc(&plan.vs))?;
    if let Some(m) = mask {
        pairs = pairs.row_scale(&m)?;
    }
    let a = pairs
        .row_select(GraphBatchPlan::rc(&plan.tn_pair))?
        .segment_sum(GraphBatchPlan::rc(&plan.tn_target), plan.num_nodes)?;
    let b = pairs
        .row_select(GraphBatchPlan::rc(&plan.nn_pair))?
        .segment_sum(GraphBatchPlan::rc(&plan.nn_target), plan.num_nodes)?;
    Ok((a, b))
}

/// Config, parameters and the fixed index layout tying them together.
#[derive(Clone, Debug)]
pub struct LganModel {
    config: LganConfig,
    in_dim: usize,
    num_classes: usize,
    params: ParamStore,
    layers: Vec<LayerParams>,
    classifier: Mlp,
    trained: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: LganConfig,
    in_dim: usize,
    num_classes: usize,
    trained: bool,
    encoder: Option<FeatureEncoder>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    header: CheckpointHeader,
    params: serde_json::Value,
}

impl LganModel {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn new(config: LganConfig, in_dim: usize, num_classes: usize, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        if in_dim == 0 || num_classes == 0 {
            return Err(ModelError::Config("input width and class count must be positive".into()));
        }
        let d = config.hidden_dim;
        let residual = config.variant == Variant::Residual;
        let mut store = ParamStore::new();
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let d_in = if l == 0 { in_dim } else { d };
            let name = |part: &str| format!("layer{l}.{part}");
            // the residual branches stay bias-free so that empty sums give z = 0
            let branch_t = mlp(&mut store, &name("branch_t"), [d_in, d, d], !residual, rng);
            let branch_n = mlp(&mut store, &name("branch_n"), [d_in, d, d], !residual, rng);
            let fuse = mlp(&mut store, &name(if residual { "psi" } else { "phi" }), [2 * d, d, d], !residual, rng);
            let (proj, post) = if residual {
                let w = store.add(name("proj.w"), glorot(d_in, d, rng));
                (Some(w), Some(mlp(&mut store, &name("phi_post"), [d, d, d], true, rng)))
            } else {
                (None, None)
            };
            layers.push(LayerParams { branch_t, branch_n, fuse, proj, post });
        }
        let classifier =
            mlp(&mut store, "classifier", [config.layers * d, config.classifier_hidden, num_classes], true, rng);
        Ok(LganModel { config, in_dim, num_classes, params: store, layers, classifier, trained: false })
    }

    pub fn config(&self) -> &LganConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.index_of(name).map(|i| &self.params.values()[i])
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    /// Records every parameter on `tape`; frozen parameters get no gradient.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> Vec<Tensor<'t>> {
        self.params
            .values()
            .iter()
            .map(|m| if trainable { tape.param(m.clone()) } else { tape.constant(m.clone()) })
            .collect()
    }

    fn check_inputs(&self, plan: &GraphBatchPlan, x: &Matrix) -> Result<(), ModelError> {
        if let Some(i) = plan.graph_sizes.iter().position(|&n| n == 0) {
            return Err(ModelError::EmptyGraph(i));
        }
        if x.shape() != (plan.num_nodes, self.in_dim) {
            return Err(ModelError::FeatureShape { expected: (plan.num_nodes, self.in_dim), got: x.shape() });
        }
        Ok(())
    }

    /// One layer update.
    pub fn layer<'t>(
        &self,
        l: usize,
        h: Tensor<'t>,
        p: &[Tensor<'t>],
        plan: &GraphBatchPlan,
        mask: Option<Tensor<'t>>,
        mode: &mut Mode,
    ) -> Result<Tensor<'t>, ModelError> {
        let lp = &self.layers[l];
        let rate = self.config.dropout;
        let (a_sum, b_sum) = dual_aggregate(h, plan, mask)?;
        let a = lp.branch_t.apply(a_sum, p, rate, mode)?;
        let b = lp.branch_n.apply(b_sum, p, rate, mode)?;
        let fused = lp.fuse.apply(Tensor::concat_cols(&[a, b])?, p, rate, mode)?;
        let out = match (lp.proj, &lp.post) {
            (Some(w), Some(post)) => post.apply(h.matmul(&p[w])?.add(&fused)?, p, rate, mode)?,
            _ => fused,
        };
        Ok(out.relu())
    }

    /// Class logits, one row per graph of `plan`.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        p: &[Tensor<'t>],
        plan: &GraphBatchPlan,
        x: &Matrix,
        mask: Option<Tensor<'t>>,
        mode: &mut Mode,
    ) -> Result<Tensor<'t>, ModelError> {
        self.check_inputs(plan, x)?;
        let mut h = tape.constant(x.clone());
        let mut skip = Vec::with_capacity(self.layers.len());
        for l in 0..self.layers.len() {
            h = self.layer(l, h, p, plan, mask, mode)?;
            skip.push(h);
        }
        let cat = Tensor::concat_cols(&skip)?;
        let mut pooled = cat.segment_sum(GraphBatchPlan::rc(&plan.node_graph), plan.num_graphs)?;
        if self.config.readout == Readout::Mean {
            let inv: Vec<f64> = plan.graph_sizes.iter().map(|&n| 1.0 / n as f64).collect();
            pooled = pooled.row_scale(&tape.constant(Matrix::column(&inv)))?;
        }
        Ok(self.classifier.apply(pooled, p, self.config.dropout, mode)?)
    }

    /// Eval-mode logits for one graph with attached features.
    pub fn logits(&self, g: &Graph) -> Result<Vec<f64>, ModelError> {
        self.logits_masked(g, None)
    }

    /// Eval-mode logits with every pair row scaled by `mask[e]`.
    pub fn logits_masked(&self, g: &Graph, mask: Option<&[f64]>) -> Result<Vec<f64>, ModelError> {
        let x = g.node_features().ok_or(ModelError::MissingFeatures)?;
        let plan = GraphBatchPlan::single(g);
        let tape = Tape::new();
        let p = self.bind(&tape, false);
        let mask = match mask {
            Some(m) if m.len() != g.edge_count() => {
                return Err(ModelError::MaskLength { expected: g.edge_count(), got: m.len() })
            }
            Some(m) => Some(tape.constant(Matrix::column(m))),
            None => None,
        };
        let out = self.forward(&tape, &p, &plan, x, mask, &mut Mode::Eval)?;
        Ok(out.value().row(0).to_vec())
    }

    /// Eval-mode logits for many graphs at once.
    pub fn logits_batch(&self, graphs: &[&Graph]) -> Result<Matrix, ModelError> {
        let plan = GraphBatchPlan::for_graphs(graphs);
        let x = stack_features(graphs)?;
        let tape = Tape::new();
        let p = self.bind(&tape, false);
        Ok((*self.forward(&tape, &p, &plan, &x, None, &mut Mode::Eval)?.value()).clone())
    }

    pub fn predict(&self, g: &Graph) -> Result<usize, ModelError> {
        let l = self.logits(g)?;
        Ok(Matrix::from_vec(1, l.len(), l).argmax_row(0))
    }

    pub fn to_checkpoint_json(&self, encoder: Option<&FeatureEncoder>) -> serde_json::Value {
        let cp = Checkpoint {
            header: CheckpointHeader {
                config: self.config.clone(),
                in_dim: self.in_dim,
                num_classes: self.num_classes,
                trained: self.trained,
                encoder: encoder.cloned(),
            },
            params: self.params.to_json_value(),
        };
        serde_json::to_value(cp).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(value: serde_json::Value) -> Result<(Self, Option<FeatureEncoder>), ModelError> {
        let bad = |msg: String| ModelError::Checkpoint { path: "<json>".into(), msg };
        let cp: Checkpoint = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        let h = cp.header;
        // the layout is a function of the config; the rng only fills values we overwrite
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut model = LganModel::new(h.config, h.in_dim, h.num_classes, &mut rng)?;
        let stored = ParamStore::from_json_value(cp.params)?;
        if stored.len() != model.params.len() {
            return Err(bad(format!("{} parameters, expected {}", stored.len(), model.params.len())));
        }
        model.params.load_from(&stored)?;
        model.trained = h.trained;
        Ok((model, h.encoder))
    }

    pub fn save(&self, path: &Path, encoder: Option<&FeatureEncoder>) -> Result<(), ModelError> {
        let text = serde_json::to_string(&self.to_checkpoint_json(encoder)).expect("checkpoint serializes");
        std::fs::write(path, text)
            .map_err(|e| ModelError::Checkpoint { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<(Self, Option<FeatureEncoder>), ModelError> {
        let err = |msg: String| ModelError::Checkpoint { path: path.display().to_string(), msg };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        LganModel::from_checkpoint_json(value).map_err(|e| match e {
            ModelError::Checkpoint { msg, .. } => err(msg),
            other => other,
        })
    }
}

/// Row-stacks the node features of `graphs`.
pub fn stack_features(graphs: &[&Graph]) -> Result<Matrix, ModelError> {
    let mut rows = 0;
    let mut width = None;
    for g in graphs {
        let x = g.node_features().ok_or(ModelError::MissingFeatures)?;
        if *width.get_or_insert(x.cols()) != x.cols() {
            return Err(ModelError::FeatureShape { expected: (x.rows(), width.unwrap()), got: x.shape() });
        }
        rows += x.rows();
    }
    let mut data = Vec::with_capacity(rows * width.unwrap_or(0));
    for g in graphs {
        data.extend_from_slice(g.node_features().expect("checked").as_slice());
    }
    Ok(Matrix::from_vec(rows, width.unwrap_or(0), data))
}
