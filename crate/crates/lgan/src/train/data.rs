use super::TrainError;
use crate::graph::{erdos_renyi, parse_tu_dataset, triangle_flag_instance, Dataset, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Synthetic datasets addressable as `synthetic:<name>`.
pub const SYNTHETIC: [&str; 2] = ["triangle", "edgeless_mix"];

/// Resolves a dataset name: `synthetic:<name>` is generated from `seed`,
/// anything else is a TU folder `<data_root>/<name>`.
pub fn load_dataset(name: &str, data_root: &Path, seed: u64) -> Result<Dataset, TrainError> {
    match name.strip_prefix("synthetic:") {
        Some("triangle") => Ok(triangle_dataset(60, seed)),
        Some("edgeless_mix") => Ok(edgeless_mix_dataset(40, seed)),
        Some(other) => {
            Err(TrainError::Config(format!("unknown synthetic dataset `{other}` (known: {})", SYNTHETIC.join(", "))))
        }
        None => Ok(parse_tu_dataset(&data_root.join(name), name)?),
    }
}

/// `pairs` positive/negative pairs for triangle detection: label 1 graphs
/// carry triangles, label 0 graphs are the same graphs minus the closing
/// edge. Graph `2i` is the positive of pair `i`.
pub fn triangle_dataset(pairs: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(2 * pairs);
    let mut labels = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let n = rng.gen_range(7..=11);
        let extra = rng.gen_range(1..=3);
        let inst = triangle_flag_instance(n, extra, &mut rng);
        graphs.push(inst.with_triangle);
        labels.push(1);
        graphs.push(inst.without_triangle);
        labels.push(0);
    }
    Dataset::new("synthetic:triangle", graphs, labels)
}

/// Random graphs where half the samples are edgeless; the label says
/// whether the graph has any edge.
pub fn edgeless_mix_dataset(count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng.gen_range(3..=8);
        let g = if i % 2 == 0 { Graph::empty(n) } else { erdos_renyi(n, 0.5, &mut rng) };
        labels.push(usize::from(g.edge_count() > 0));
        graphs.push(g);
    }
    Dataset::new("synthetic:edgeless_mix", graphs, labels)
}
