//! Message counting and per-layer timing.
//!
//! The per-layer cost model is linear in the number of messages
//! `Σ d_v + Σ |edges among N(v)|`; [`linear_fit`] checks how well measured
//! times follow it.

use crate::autodiff::Tape;
use crate::graph::{erdos_renyi, Graph};
use crate::matrix::Matrix;
use crate::model::{message_counts, GraphBatchPlan, LganConfig, LganModel, Mode, ModelError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub graph: String,
    pub nodes: usize,
    pub edges: usize,
    pub target_msgs: usize,
    pub neighbor_msgs: usize,
    /// Median seconds for one forward layer update; `None` when untimed.
    pub layer_seconds: Option<f64>,
}

impl BenchRow {
    pub fn messages(&self) -> usize {
        self.target_msgs + self.neighbor_msgs
    }
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Fit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Fit { slope, intercept, r2: 1.0 - sse / syy }
}

/// Erdős–Rényi graphs with `p = mean_degree / (n - 1)`, one per size.
pub fn er_sweep(sizes: &[usize], mean_degree: f64, seed: u64) -> Vec<(String, Graph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sizes
        .iter()
        .map(|&n| {
            let p = if n > 1 { (mean_degree / (n - 1) as f64).min(1.0) } else { 0.0 };
            (format!("er_n{n}"), erdos_renyi(n, p, &mut rng))
        })
        .collect()
}

pub const DEFAULT_SWEEP: [usize; 8] = [100, 250, 500, 750, 1000, 1250, 1500, 2000];

/// Times one layer update of a random `hidden_dim`-wide model on `g`,
/// returning the median over `reps` runs.
pub fn time_layer(g: &Graph, hidden_dim: usize, reps: usize, seed: u64) -> Result<f64, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = LganConfig { layers: 1, hidden_dim, ..LganConfig::default() };
    let model = LganModel::new(cfg, hidden_dim, 2, &mut rng)?;
    let n = g.node_count();
    let x = Matrix::from_vec(n, hidden_dim, (0..n * hidden_dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let plan = GraphBatchPlan::single(g);
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let tape = Tape::new();
        let p = model.bind(&tape, false);
        let h = tape.constant(x.clone());
        let start = Instant::now();
        let out = model.layer(0, h, &p, &plan, None, &mut Mode::Eval)?;
        std::hint::black_box(out.value());
        samples.push(start.elapsed().as_secs_f64());
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[samples.len() / 2])
}

/// Counts (and optionally times) every graph.
pub fn bench_graphs(
    graphs: &[(String, Graph)],
    timing: Option<(usize, usize)>,
    seed: u64,
) -> Result<Vec<BenchRow>, ModelError> {
    graphs
        .iter()
        .map(|(name, g)| {
            let (target_msgs, neighbor_msgs) = message_counts(g);
            let layer_seconds = match timing {
                Some((hidden, reps)) => Some(time_layer(g, hidden, reps, seed)?),
                None => None,
            };
            Ok(BenchRow {
                graph: name.clone(),
                nodes: g.node_count(),
                edges: g.edge_count(),
                target_msgs,
                neighbor_msgs,
                layer_seconds,
            })
        })
        .collect()
}

/// Fit of layer time against message count over the timed rows.
pub fn fit_rows(rows: &[BenchRow]) -> Option<Fit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| r.layer_seconds.map(|t| (r.messages() as f64, t))).unzip();
    (xs.len() >= 3).then(|| linear_fit(&xs, &ys))
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("graph,nodes,edges,target_msgs,neighbor_msgs,layer_seconds\n");
    for r in rows {
        let t = r.layer_seconds.map_or(String::new(), |t| format!("{t:.9}"));
        writeln!(out, "{},{},{},{},{},{}", r.graph, r.nodes, r.edges, r.target_msgs, r.neighbor_msgs, t)
            .expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fits_perfectly() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r2_matches_squared_correlation() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.1, 1.9, 3.4, 3.9, 5.3];
        let n = 5.0;
        let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let sxx: f64 = xs.iter().map(|a| a * a).sum();
        let syy: f64 = ys.iter().map(|a| a * a).sum();
        let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((linear_fit(&xs, &ys).r2 - r * r).abs() < 1e-12);
    }

    #[test]
    fn sweep_keeps_mean_degree_roughly_constant() {
        for (_, g) in er_sweep(&[200, 800], 4.0, 1) {
            let mean = 2.0 * g.edge_count() as f64 / g.node_count() as f64;
            assert!((mean - 4.0).abs() < 0.6, "{mean}");
        }
    }

    #[test]
    fn rows_carry_counts_and_optional_time() {
        let graphs = vec![("c6".to_string(), crate::graph::cycle(6))];
        let rows = bench_graphs(&graphs, None, 0).unwrap();
        assert_eq!((rows[0].target_msgs, rows[0].neighbor_msgs), (12, 0));
        assert!(rows_csv(&rows).lines().nth(1).unwrap().starts_with("c6,6,6,12,0,"));
        let timed = bench_graphs(&graphs, Some((4, 3)), 0).unwrap();
        assert!(timed[0].layer_seconds.unwrap() > 0.0);
        assert!(fit_rows(&timed).is_none());
    }
}
