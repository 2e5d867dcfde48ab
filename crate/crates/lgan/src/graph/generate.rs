use super::{Graph, GraphError};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 nodes");
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges).expect("valid complete graph")
}

/// `K_{1,leaves}` with the center at node 0.
pub fn star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("valid star")
}

/// Disjoint union; `b`'s nodes are shifted past `a`'s. Attributes are dropped.
pub fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
    let off = a.node_count();
    let edges = a.edges().iter().copied().chain(b.edges().iter().map(|&(u, v)| (u + off, v + off)));
    Graph::new(off + b.node_count(), edges).expect("valid union")
}

/// `G(n, p)` by independent coin flips.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("valid random graph")
}

/// Random relabeling; returns the relabeled graph and the permutation used
/// (old node `v` became `perm[v]`).
pub fn random_relabel<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> (Graph, Vec<usize>) {
    let mut perm: Vec<usize> = (0..g.node_count()).collect();
    perm.shuffle(rng);
    (g.permuted(&perm), perm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// `(C6, 2×K3)`: both 2-regular on 6 nodes.
    OneWlBlind,
    /// `(K3, K1,3)`: the two graphs sharing the line graph `K3`.
    WhitneyException,
    /// A triangle-bearing graph and the same graph minus its closing edge.
    TriangleFlag,
}

impl PairKind {
    pub const ALL: [PairKind; 3] = [PairKind::OneWlBlind, PairKind::WhitneyException, PairKind::TriangleFlag];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::OneWlBlind => "onewl_blind",
            PairKind::WhitneyException => "whitney_exception",
            PairKind::TriangleFlag => "triangle_flag",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PairKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| GraphError::UnknownPairKind(s.to_string()))
    }
}

/// The fixed fixture pairs. For `TriangleFlag` the first graph carries the
/// triangles and the second is the same graph with edge `{0, 2}` removed.
pub fn generate_pair(kind: PairKind) -> (Graph, Graph) {
    match kind {
        PairKind::OneWlBlind => (cycle(6), disjoint_union(&complete(3), &complete(3))),
        PairKind::WhitneyException => (complete(3), star(3)),
        PairKind::TriangleFlag => {
            let inst = TriangleFlagInstance::canonical();
            (inst.with_triangle, inst.without_triangle)
        }
    }
}

/// One positive/negative pair for the triangle-detection task.
///
/// `without_triangle` is triangle-free and contains the 4-cycle
/// `a–b–c–d`; `with_triangle` adds the chord `{a, c}`, which therefore closes
/// at least two triangles while every other edge lies on at most one.
#[derive(Clone, Debug)]
pub struct TriangleFlagInstance {
    pub with_triangle: Graph,
    pub without_triangle: Graph,
    pub closing_edge: (usize, usize),
}

impl TriangleFlagInstance {
    fn canonical() -> Self {
        let base = [(0, 1), (1, 2), (2, 3), (0, 3), (3, 4), (4, 5), (1, 5)];
        let without = Graph::new(6, base).expect("valid");
        let with = Graph::new(6, base.into_iter().chain([(0, 2)])).expect("valid");
        TriangleFlagInstance { with_triangle: with, without_triangle: without, closing_edge: (0, 2) }
    }
}

fn add_edge(u: usize, v: usize, adj: &mut [Vec<bool>], edges: &mut Vec<(usize, usize)>) {
    adj[u][v] = true;
    adj[v][u] = true;
    edges.push((u, v));
}

fn closes_triangle(adj: &[Vec<bool>], u: usize, v: usize) -> bool {
    adj[u].iter().zip(&adj[v]).any(|(&a, &b)| a && b)
}

/// Random instance on `n ≥ 4` nodes: a 4-cycle, a random spanning attachment
/// of the remaining nodes, then `extra` random chords that keep the base
/// triangle-free. Node ids are shuffled.
pub fn triangle_flag_instance<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> TriangleFlagInstance {
    assert!(n >= 4, "triangle_flag_instance needs at least 4 nodes");
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
        add_edge(u, v, &mut adj, &mut edges);
    }
    for v in 4..n {
        let u = rng.gen_range(0..v);
        add_edge(u, v, &mut adj, &mut edges);
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra && attempts < extra * 50 {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || adj[u][v] || (u.min(v), u.max(v)) == (0, 2) || closes_triangle(&adj, u, v) {
            continue;
        }
        add_edge(u, v, &mut adj, &mut edges);
        added += 1;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let without = Graph::new(n, edges.iter().map(|&(u, v)| (perm[u], perm[v]))).expect("valid");
    let closing = (perm[0].min(perm[2]), perm[0].max(perm[2]));
    let with = Graph::new(n, without.edges().iter().copied().chain([closing])).expect("valid");
    TriangleFlagInstance { with_triangle: with, without_triangle: without, closing_edge: closing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triangles(g: &Graph) -> usize {
        (0..g.node_count()).map(|v| g.neighbor_edge_count(v)).sum::<usize>() / 3
    }

    #[test]
    fn onewl_blind_pair_is_two_regular() {
        let (a, b) = generate_pair(PairKind::OneWlBlind);
        for g in [&a, &b] {
            assert_eq!(g.node_count(), 6);
            assert_eq!(g.edge_count(), 6);
            assert!((0..6).all(|v| g.degree(v) == 2));
        }
        assert!(a.is_connected());
        assert!(!b.is_connected());
    }

    #[test]
    fn whitney_pair_sizes() {
        let (a, b) = generate_pair(PairKind::WhitneyException);
        assert_eq!((a.node_count(), b.node_count()), (3, 4));
    }

    #[test]
    fn triangle_flag_differs_in_one_edge() {
        let (with, without) = generate_pair(PairKind::TriangleFlag);
        assert_eq!(with.node_count(), without.node_count());
        assert_eq!(with.edge_count(), without.edge_count() + 1);
        assert!(without.edges().iter().all(|&(u, v)| with.has_edge(u, v)));
        assert_eq!(triangles(&without), 0);
        assert_eq!(triangles(&with), 2);
    }

    #[test]
    fn random_triangle_instances_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let inst = triangle_flag_instance(10, 4, &mut rng);
            assert_eq!(triangles(&inst.without_triangle), 0);
            assert!(triangles(&inst.with_triangle) >= 2);
            let (u, v) = inst.closing_edge;
            assert!(inst.with_triangle.has_edge(u, v));
            assert!(!inst.without_triangle.has_edge(u, v));
            assert_eq!(inst.with_triangle.edge_count(), inst.without_triangle.edge_count() + 1);
        }
    }

    #[test]
    fn pair_kind_parsing() {
        assert_eq!("whitney_exception".parse::<PairKind>().unwrap(), PairKind::WhitneyException);
        assert!(matches!("nope".parse::<PairKind>(), Err(GraphError::UnknownPairKind(_))));
    }
}
