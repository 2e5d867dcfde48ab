use crate::graph::Graph;
use std::rc::Rc;

/// Index lists that drive one forward pass over a disjoint union of graphs.
///
/// Pair (line-graph node) `e` is the edge `{us[e], vs[e]}`. For every target
/// node `t`, the target–neighbor list holds the pairs `{t, p}` and the
/// neighbor–neighbor list holds the pairs `{p, q}` with `p, q ∈ N(t)`; both
/// are flattened into `(pair, target)` columns so that a segment sum over the
/// target column performs the aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBatchPlan {
    pub(crate) num_nodes: usize,
    pub(crate) num_graphs: usize,
    pub(crate) us: Vec<usize>,
    pub(crate) vs: Vec<usize>,
    pub(crate) tn_pair: Vec<usize>,
    pub(crate) tn_target: Vec<usize>,
    pub(crate) nn_pair: Vec<usize>,
    pub(crate) nn_target: Vec<usize>,
    pub(crate) node_graph: Vec<usize>,
    pub(crate) graph_sizes: Vec<usize>,
}

impl GraphBatchPlan {
    /// Plan for a single graph; a pure function of its topology.
    pub fn single(g: &Graph) -> Self {
        let n = g.node_count();
        let (us, vs): (Vec<usize>, Vec<usize>) = g.edges().iter().copied().unzip();
        let mut tn_pair = Vec::new();
        let mut tn_target = Vec::new();
        let mut nn_pair = Vec::new();
        let mut nn_target = Vec::new();
        for t in 0..n {
            let nbrs = g.neighbors(t);
            for &p in nbrs {
                tn_pair.push(g.edge_index(t, p).expect("incident edge"));
                tn_target.push(t);
            }
            for (i, &p) in nbrs.iter().enumerate() {
                for &q in &nbrs[i + 1..] {
                    if let Some(e) = g.edge_index(p, q) {
                        nn_pair.push(e);
                        nn_target.push(t);
                    }
                }
            }
        }
        GraphBatchPlan {
            num_nodes: n,
            num_graphs: 1,
            us,
            vs,
            tn_pair,
            tn_target,
            nn_pair,
            nn_target,
            node_graph: vec![0; n],
            graph_sizes: vec![n],
        }
    }

    /// Disjoint union of already-built plans, in order.
    pub fn concat(plans: &[&GraphBatchPlan]) -> Self {
        let mut out = GraphBatchPlan {
            num_nodes: 0,
            num_graphs: 0,
            us: Vec::new(),
            vs: Vec::new(),
            tn_pair: Vec::new(),
            tn_target: Vec::new(),
            nn_pair: Vec::new(),
            nn_target: Vec::new(),
            node_graph: Vec::new(),
            graph_sizes: Vec::new(),
        };
        for p in plans {
            let (node_off, pair_off, graph_off) = (out.num_nodes, out.us.len(), out.num_graphs);
            out.us.extend(p.us.iter().map(|u| u + node_off));
            out.vs.extend(p.vs.iter().map(|v| v + node_off));
            out.tn_pair.extend(p.tn_pair.iter().map(|e| e + pair_off));
            out.tn_target.extend(p.tn_target.iter().map(|t| t + node_off));
            out.nn_pair.extend(p.nn_pair.iter().map(|e| e + pair_off));
            out.nn_target.extend(p.nn_target.iter().map(|t| t + node_off));
            out.node_graph.extend(p.node_graph.iter().map(|g| g + graph_off));
            out.graph_sizes.extend_from_slice(&p.graph_sizes);
            out.num_nodes += p.num_nodes;
            out.num_graphs += p.num_graphs;
        }
        out
    }

    pub fn for_graphs(graphs: &[&Graph]) -> Self {
        let plans: Vec<GraphBatchPlan> = graphs.iter().map(|g| GraphBatchPlan::single(g)).collect();
        GraphBatchPlan::concat(&plans.iter().collect::<Vec<_>>())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_graphs(&self) -> usize {
        self.num_graphs
    }

    pub fn num_pairs(&self) -> usize {
        self.us.len()
    }

    pub fn graph_sizes(&self) -> &[usize] {
        &self.graph_sizes
    }

    /// Pair ids in the target–neighbor list of `t`.
    pub fn target_pairs(&self, t: usize) -> Vec<usize> {
        select(&self.tn_pair, &self.tn_target, t)
    }

    /// Pair ids in the neighbor–neighbor list of `t`.
    pub fn neighbor_pairs(&self, t: usize) -> Vec<usize> {
        select(&self.nn_pair, &self.nn_target, t)
    }

    /// `(Σ_v d_v, Σ_v |edges among N(v)|)`.
    pub fn message_counts(&self) -> (usize, usize) {
        (self.tn_pair.len(), self.nn_pair.len())
    }

    pub(crate) fn rc(v: &[usize]) -> Rc<[usize]> {
        Rc::from(v)
    }
}

fn select(pairs: &[usize], targets: &[usize], t: usize) -> Vec<usize> {
    pairs.iter().zip(targets).filter(|&(_, &x)| x == t).map(|(&e, _)| e).collect()
}

/// Messages per layer: target–neighbor and neighbor–neighbor pair counts.
pub fn message_counts(g: &Graph) -> (usize, usize) {
    GraphBatchPlan::single(g).message_counts()
}
