//! Exhaustive generation of small graphs up to isomorphism.

use super::Graph;
use std::collections::HashSet;

const MAX_CANONICAL_NODES: usize = 11;

/// A complete isomorphism invariant for graphs with at most 11 nodes:
/// the lexicographically largest upper-triangle adjacency code over all
/// orderings that respect the degree-refined vertex partition.
///
/// Node labels and features are ignored.
pub fn canonical_code(g: &Graph) -> u64 {
    let n = g.node_count();
    assert!(n <= MAX_CANONICAL_NODES, "canonical_code supports at most {MAX_CANONICAL_NODES} nodes");
    let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u))).collect();
    canonical_from_masks(&adj)
}

/// Color refinement whose color names are derived from the sorted
/// signatures themselves, so the resulting cell order is isomorphism
/// invariant.
fn refined_colors(adj: &[u32]) -> Vec<usize> {
    let n = adj.len();
    let mut color: Vec<usize> = adj.iter().map(|m| m.count_ones() as usize).collect();
    let mut classes = 0;
    loop {
        let keys: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n).filter(|&u| adj[v] >> u & 1 == 1).map(|u| color[u]).collect();
                nb.sort_unstable();
                (color[v], nb)
            })
            .collect();
        let mut distinct = keys.clone();
        distinct.sort();
        distinct.dedup();
        color = keys.iter().map(|k| distinct.binary_search(k).expect("present")).collect();
        if distinct.len() == classes {
            return color;
        }
        classes = distinct.len();
    }
}

struct Search<'a> {
    adj: &'a [u32],
    color: Vec<usize>,
    slots: Vec<usize>,
    order: Vec<usize>,
    used: u32,
    best: Option<u64>,
    total_bits: u32,
}

impl Search<'_> {
    /// Places a vertex at position `pos`; `code` holds the `bits` adjacency
    /// bits fixed so far, most significant first.
    fn run(&mut self, pos: usize, code: u64, bits: u32) {
        if pos == self.slots.len() {
            if self.best.is_none_or(|b| code > b) {
                self.best = Some(code);
            }
            return;
        }
        let cell = self.slots[pos];
        for v in 0..self.adj.len() {
            if self.used >> v & 1 == 1 || self.color[v] != cell {
                continue;
            }
            let mut c = code;
            for &u in &self.order {
                c = (c << 1) | u64::from(self.adj[v] >> u & 1);
            }
            let b = bits + pos as u32;
            if let Some(best) = self.best {
                if c < best >> (self.total_bits - b) {
                    continue;
                }
            }
            self.used |= 1 << v;
            self.order.push(v);
            self.run(pos + 1, c, b);
            self.order.pop();
            self.used &= !(1 << v);
        }
    }
}

fn canonical_from_masks(adj: &[u32]) -> u64 {
    let n = adj.len();
    let color = refined_colors(adj);
    let mut slots = color.clone();
    slots.sort_unstable();
    let mut search = Search {
        adj,
        color,
        slots,
        order: Vec::with_capacity(n),
        used: 0,
        best: None,
        total_bits: (n * n.saturating_sub(1) / 2) as u32,
    };
    search.run(0, 0, 0);
    search.best.unwrap_or(0)
}

fn graph_from_code(n: usize, code: u64) -> Graph {
    let total = n * n.saturating_sub(1) / 2;
    let mut edges = Vec::new();
    let mut bit = total;
    for j in 0..n {
        for i in 0..j {
            bit -= 1;
            if code >> bit & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("decoded graph is simple")
}

/// All graphs on exactly `n` nodes, one per isomorphism class, ordered by
/// edge count and then by canonical code. Each graph is returned in its
/// canonical labeling.
///
/// Generation adds one edge at a time and deduplicates by
/// [`canonical_code`]; `n = 8` (12 346 classes) takes a few seconds.
pub fn enumerate_graphs(n: usize) -> Vec<Graph> {
    assert!(n <= 9, "enumeration is limited to 9 nodes");
    let mut level: Vec<u64> = vec![0];
    let mut out: Vec<Graph> = vec![graph_from_code(n, 0)];
    let max_edges = n * n.saturating_sub(1) / 2;
    for _ in 0..max_edges {
        let mut next = HashSet::new();
        for &code in &level {
            let g = graph_from_code(n, code);
            let mut adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u))).collect();
            for u in 0..n {
                for v in u + 1..n {
                    if adj[u] >> v & 1 == 1 {
                        continue;
                    }
                    adj[u] |= 1 << v;
                    adj[v] |= 1 << u;
                    next.insert(canonical_from_masks(&adj));
                    adj[u] &= !(1 << v);
                    adj[v] &= !(1 << u);
                }
            }
        }
        let mut sorted: Vec<u64> = next.into_iter().collect();
        sorted.sort_unstable();
        out.extend(sorted.iter().map(|&c| graph_from_code(n, c)));
        level = sorted;
    }
    out
}
