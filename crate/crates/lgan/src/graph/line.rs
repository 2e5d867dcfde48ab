use super::{Graph, GraphError};
use crate::matrix::Matrix;

/// The line graph `L(G)`: one node per edge of `G`, adjacent when the two
/// edges share an endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct LineGraph {
    base_edges: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
}

impl LineGraph {
    /// Edges of the source graph, indexed by line-graph node.
    pub fn base_edges(&self) -> &[(usize, usize)] {
        &self.base_edges
    }

    /// Pairs `(i, j)`, `i < j`, of indices into [`LineGraph::base_edges`].
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.base_edges.len()
    }

    pub fn to_graph(&self) -> Graph {
        Graph::new(self.base_edges.len(), self.edges.iter().copied()).expect("line graph is simple")
    }
}

/// Builds `L(g)`. Base edges keep `g`'s lexicographic edge order.
pub fn line_graph(g: &Graph) -> LineGraph {
    let mut edges = Vec::new();
    for v in 0..g.node_count() {
        let incident: Vec<usize> =
            g.neighbors(v).iter().map(|&u| g.edge_index(v, u).expect("adjacency and edge list agree")).collect();
        for (i, &a) in incident.iter().enumerate() {
            for &b in &incident[i + 1..] {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    // two distinct simple edges share at most one endpoint, so no pair repeats
    edges.sort_unstable();
    LineGraph { base_edges: g.edges().to_vec(), edges }
}

/// Induced subgraph on `{t} ∪ N(t)`.
#[derive(Clone, Debug)]
pub struct EgoSubgraph {
    pub graph: Graph,
    /// `original[i]` is the index in the source graph of local node `i`.
    pub original: Vec<usize>,
    /// Local index of the center node.
    pub center: usize,
}

pub fn ego_subgraph(g: &Graph, t: usize) -> Result<EgoSubgraph, GraphError> {
    if t >= g.node_count() {
        return Err(GraphError::NoSuchNode { node: t, n: g.node_count() });
    }
    let mut original: Vec<usize> = g.neighbors(t).to_vec();
    original.push(t);
    original.sort_unstable();
    let local = |v: usize| original.binary_search(&v).ok();
    let mut edges = Vec::new();
    for (i, &u) in original.iter().enumerate() {
        for &w in g.neighbors(u) {
            if let Some(j) = local(w) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    let mut graph = Graph::new(original.len(), edges)?;
    if let Some(labels) = g.node_labels() {
        graph = graph.with_labels(original.iter().map(|&v| labels[v]).collect())?;
    }
    if let Some(x) = g.node_features() {
        let mut sub = Matrix::zeros(original.len(), x.cols());
        for (i, &v) in original.iter().enumerate() {
            sub.row_mut(i).copy_from_slice(x.row(v));
        }
        graph = graph.with_features(sub)?;
    }
    let center = local(t).expect("center is in its own ego set");
    Ok(EgoSubgraph { graph, original, center })
}
