use super::{Graph, GraphError};

/// Largest graph the exhaustive isomorphism search accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 9;

/// Exhaustive search for an edge-, label- and feature-preserving bijection.
///
/// Candidates are pruned by degree and by consistency with already-mapped
/// nodes, but the search is still exponential; inputs above
/// [`BRUTE_FORCE_MAX_NODES`] nodes are refused.
pub fn brute_force_isomorphic(g: &Graph, h: &Graph) -> Result<bool, GraphError> {
    for x in [g, h] {
        if x.node_count() > BRUTE_FORCE_MAX_NODES {
            return Err(GraphError::TooLarge { limit: BRUTE_FORCE_MAX_NODES, got: x.node_count() });
        }
    }
    if g.node_count() != h.node_count() || g.edge_count() != h.edge_count() {
        return Ok(false);
    }
    if g.node_labels().is_some() != h.node_labels().is_some()
        || g.node_features().is_some() != h.node_features().is_some()
    {
        return Ok(false);
    }
    let mut gd: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    let mut hd: Vec<usize> = (0..h.node_count()).map(|v| h.degree(v)).collect();
    gd.sort_unstable();
    hd.sort_unstable();
    if gd != hd {
        return Ok(false);
    }
    let n = g.node_count();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(g, h, 0, &mut map, &mut used))
}

fn compatible(g: &Graph, h: &Graph, v: usize, w: usize) -> bool {
    if g.degree(v) != h.degree(w) {
        return false;
    }
    if let (Some(a), Some(b)) = (g.node_labels(), h.node_labels()) {
        if a[v] != b[w] {
            return false;
        }
    }
    if let (Some(a), Some(b)) = (g.node_features(), h.node_features()) {
        if a.row(v) != b.row(w) {
            return false;
        }
    }
    true
}

fn extend(g: &Graph, h: &Graph, v: usize, map: &mut [usize], used: &mut [bool]) -> bool {
    if v == g.node_count() {
        return true;
    }
    for w in 0..h.node_count() {
        if used[w] || !compatible(g, h, v, w) {
            continue;
        }
        let consistent = (0..v).all(|u| g.has_edge(u, v) == h.has_edge(map[u], w));
        if !consistent {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if extend(g, h, v + 1, map, used) {
            return true;
        }
        used[w] = false;
        map[v] = usize::MAX;
    }
    false
}
