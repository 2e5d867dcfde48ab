//! Undirected simple graphs and the structures built from them.

mod dataset;
mod enumerate;
mod generate;
mod iso;
mod line;
mod tu;

pub use dataset::{degree_one_hot, Dataset, FeatureEncoder};
pub use enumerate::{canonical_code, enumerate_graphs};
pub use generate::{
    complete, cycle, disjoint_union, erdos_renyi, generate_pair, path, random_relabel, star, triangle_flag_instance,
    PairKind, TriangleFlagInstance,
};
pub use iso::{brute_force_isomorphic, BRUTE_FORCE_MAX_NODES};
pub use line::{ego_subgraph, line_graph, EgoSubgraph, LineGraph};
pub use tu::{parse_tu_dataset, write_tu_dataset};

use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("feature matrix has {rows} rows but the graph has {n} nodes")]
    FeatureRows { rows: usize, n: usize },
    #[error("label vector has {len} entries but the graph has {n} nodes")]
    LabelCount { len: usize, n: usize },
    #[error("node {node} is out of range for a graph with {n} nodes")]
    NoSuchNode { node: usize, n: usize },
    #[error("brute-force isomorphism is limited to {limit} nodes, got {got}")]
    TooLarge { limit: usize, got: usize },
    #[error("node {node} has degree {degree}, above the encoding limit {max_degree}")]
    DegreeTooLarge { node: usize, degree: usize, max_degree: usize },
    #[error("missing dataset file {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {msg}")]
    Format { file: String, line: usize, msg: String },
    #[error("unknown pair kind `{0}` (expected onewl_blind, whitney_exception or triangle_flag)")]
    UnknownPairKind(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Serializable topology of a [`Graph`] (labels and features are not kept).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl From<&Graph> for GraphSpec {
    fn from(g: &Graph) -> Self {
        GraphSpec { nodes: g.n, edges: g.edges.clone() }
    }
}

impl TryFrom<&GraphSpec> for Graph {
    type Error = GraphError;

    fn try_from(s: &GraphSpec) -> Result<Self, GraphError> {
        Graph::new(s.nodes, s.edges.iter().copied())
    }
}

/// An immutable undirected graph without self-loops or parallel edges.
///
/// Edges are stored once as `(min, max)` and kept in lexicographic order, so
/// the position of an edge in [`Graph::edges`] is a stable edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    node_labels: Option<Vec<u32>>,
    node_features: Option<Matrix>,
}

impl Graph {
    /// Builds a graph; repeated edges (in either orientation) are collapsed.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph { n, edges: list, adj, node_labels: None, node_features: None })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new(), adj: vec![Vec::new(); n], node_labels: None, node_features: None }
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self, GraphError> {
        if labels.len() != self.n {
            return Err(GraphError::LabelCount { len: labels.len(), n: self.n });
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self, GraphError> {
        if features.rows() != self.n {
            return Err(GraphError::FeatureRows { rows: features.rows(), n: self.n });
        }
        self.node_features = Some(features);
        Ok(self)
    }

    pub fn without_features(mut self) -> Self {
        self.node_features = None;
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Position of `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn node_labels(&self) -> Option<&[u32]> {
        self.node_labels.as_deref()
    }

    pub fn node_features(&self) -> Option<&Matrix> {
        self.node_features.as_ref()
    }

    /// Same node set and attributes, no edges.
    pub fn edgeless(&self) -> Graph {
        Graph {
            n: self.n,
            edges: Vec::new(),
            adj: vec![Vec::new(); self.n],
            node_labels: self.node_labels.clone(),
            node_features: self.node_features.clone(),
        }
    }

    /// Number of edges among the neighbors of `v`, i.e. the neighbor–neighbor
    /// pairs seen from `v`'s ego network.
    pub fn neighbor_edge_count(&self, v: usize) -> usize {
        let nb = &self.adj[v];
        let mut count = 0;
        for (i, &p) in nb.iter().enumerate() {
            for &q in &nb[i + 1..] {
                if self.has_edge(p, q) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Relabels nodes so that old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n, "permutation length");
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        let mut g = Graph::new(self.n, edges).expect("permutation preserves validity");
        if let Some(labels) = &self.node_labels {
            let mut out = vec![0; self.n];
            for (v, &l) in labels.iter().enumerate() {
                out[perm[v]] = l;
            }
            g.node_labels = Some(out);
        }
        if let Some(x) = &self.node_features {
            let mut out = Matrix::zeros(x.rows(), x.cols());
            for v in 0..self.n {
                out.row_mut(perm[v]).copy_from_slice(x.row(v));
            }
            g.node_features = Some(out);
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// True when some node has no incident edge (its ego line graph is empty).
    pub fn has_isolated_node(&self) -> bool {
        self.adj.iter().any(Vec::is_empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(matches!(Graph::new(3, [(1, 1)]), Err(GraphError::SelfLoop(1))));
        assert!(matches!(Graph::new(3, [(0, 3)]), Err(GraphError::NodeOutOfRange { .. })));
    }

    #[test]
    fn collapses_duplicate_edges() {
        let g = Graph::new(3, [(0, 1), (1, 0), (2, 1), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.edge_index(2, 1), Some(1));
        assert_eq!(g.edge_index(0, 2), None);
    }

    #[test]
    fn feature_rows_must_match() {
        let g = Graph::empty(3);
        assert!(g.clone().with_features(Matrix::zeros(2, 4)).is_err());
        assert!(g.with_features(Matrix::zeros(3, 4)).is_ok());
    }

    #[test]
    fn neighbor_edges_of_triangle_and_cycle() {
        let k3 = complete(3);
        assert!((0..3).all(|v| k3.neighbor_edge_count(v) == 1));
        let c6 = cycle(6);
        assert!((0..6).all(|v| c6.neighbor_edge_count(v) == 0));
    }

    #[test]
    fn permutation_moves_features() {
        let g = path(3).with_features(Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]])).unwrap();
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.node_features().unwrap().as_slice(), &[2.0, 3.0, 1.0]);
        assert!(p.has_edge(2, 0) && p.has_edge(0, 1));
    }
}
