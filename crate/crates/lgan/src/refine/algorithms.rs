use super::{run_joint, ColorDictionary, Coloring, RefineError, UnitKind};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Sig {
    Uniform,
    Label(u32),
    Features(Vec<u64>),
    /// 1-WL: own color, sorted neighbor colors.
    Wl(u32, Vec<u32>),
    /// Pair initialization: sorted endpoint colors, adjacency.
    PairInit(u32, u32, bool),
    /// Set-based 2-WL: own color, the two replacement multisets in sorted order.
    Set2Wl(u32, Vec<u32>, Vec<u32>),
    /// Set-based 2-FWL: own color, multiset of per-witness unordered color pairs.
    Set2Fwl(u32, Vec<(u32, u32)>),
    /// Line-graph hash: target–neighbor pair multiset, neighbor–neighbor pair multiset.
    Lgan(Vec<(u32, u32)>, Vec<(u32, u32)>),
    /// Line-graph hash fallback for nodes with an empty ego edge set.
    LganIsolated(u32),
}

fn initial_node_colors(g: &Graph, dict: &mut ColorDictionary<Sig>) -> Vec<u32> {
    (0..g.node_count())
        .map(|v| {
            let sig = if let Some(x) = g.node_features() {
                Sig::Features(x.row(v).iter().map(|f| f.to_bits()).collect())
            } else if let Some(l) = g.node_labels() {
                Sig::Label(l[v])
            } else {
                Sig::Uniform
            };
            dict.color(sig)
        })
        .collect()
}

fn sorted_pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Index of the unordered pair `{a, b}` among the `C(n, 2)` pairs of an
/// `n`-node graph, in lexicographic order of `(min, max)`.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    debug_assert!(a != b && b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// All unordered pairs `(a, b)`, `a < b`, in [`pair_index`] order.
pub fn pair_units(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

pub fn refine_1wl(g: &Graph) -> Coloring {
    refine_1wl_joint(&[g]).pop().expect("one coloring")
}

pub fn refine_1wl_joint(graphs: &[&Graph]) -> Vec<Coloring> {
    let mut dict = ColorDictionary::new();
    run_joint(
        graphs,
        UnitKind::Node,
        None,
        &mut dict,
        |g, d| initial_node_colors(g, d),
        |g, c, d| {
            (0..g.node_count())
                .map(|v| {
                    let mut nb: Vec<u32> = g.neighbors(v).iter().map(|&u| c[u]).collect();
                    nb.sort_unstable();
                    d.color(Sig::Wl(c[v], nb))
                })
                .collect()
        },
    )
}

fn initial_pair_colors(g: &Graph, dict: &mut ColorDictionary<Sig>) -> Vec<u32> {
    let node = initial_node_colors(g, dict);
    pair_units(g.node_count())
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = sorted_pair(node[a], node[b]);
            dict.color(Sig::PairInit(x, y, g.has_edge(a, b)))
        })
        .collect()
}

fn check_pairs(graphs: &[&Graph], name: &'static str) -> Result<(), RefineError> {
    match graphs.iter().find(|g| g.node_count() < 2) {
        Some(g) => Err(RefineError::TooFewNodes(name, g.node_count())),
        None => Ok(()),
    }
}

pub fn refine_set2wl(g: &Graph) -> Result<Coloring, RefineError> {
    Ok(refine_set2wl_joint(&[g])?.pop().expect("one coloring"))
}

/// Set-based 2-WL over unordered pairs. A pair `{a, b}` is updated from its
/// own color and the unordered pair of multisets `{{c{w,b}}}`, `{{c{a,w}}}`
/// with `w` ranging over `V \ {a, b}`.
pub fn refine_set2wl_joint(graphs: &[&Graph]) -> Result<Vec<Coloring>, RefineError> {
    check_pairs(graphs, "set-based 2-WL")?;
    let mut dict = ColorDictionary::new();
    Ok(run_joint(
        graphs,
        UnitKind::UnorderedPair,
        None,
        &mut dict,
        |g, d| initial_pair_colors(g, d),
        |g, c, d| {
            let n = g.node_count();
            pair_units(n)
                .into_iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let others = (0..n).filter(|&w| w != a && w != b);
                    let mut side_b: Vec<u32> = others.clone().map(|w| c[pair_index(n, w, b)]).collect();
                    let mut side_a: Vec<u32> = others.map(|w| c[pair_index(n, a, w)]).collect();
                    side_a.sort_unstable();
                    side_b.sort_unstable();
                    let (lo, hi) = if side_a <= side_b { (side_a, side_b) } else { (side_b, side_a) };
                    d.color(Sig::Set2Wl(c[i], lo, hi))
                })
                .collect()
        },
    ))
}

pub fn refine_set2fwl(g: &Graph) -> Result<Coloring, RefineError> {
    Ok(refine_set2fwl_joint(&[g])?.pop().expect("one coloring"))
}

/// Set-based 2-FWL: for every `w ∉ {p, q}` the unordered pair
/// `{{c{w,q}, c{p,w}}}` is formed, and `{p, q}` is rehashed with the
/// multiset of those pairs.
pub fn refine_set2fwl_joint(graphs: &[&Graph]) -> Result<Vec<Coloring>, RefineError> {
    check_pairs(graphs, "set-based 2-FWL")?;
    let mut dict = ColorDictionary::new();
    Ok(run_joint(
        graphs,
        UnitKind::UnorderedPair,
        None,
        &mut dict,
        |g, d| initial_pair_colors(g, d),
        |g, c, d| {
            let n = g.node_count();
            pair_units(n)
                .into_iter()
                .enumerate()
                .map(|(i, (p, q))| {
                    let mut witnesses: Vec<(u32, u32)> = (0..n)
                        .filter(|&w| w != p && w != q)
                        .map(|w| sorted_pair(c[pair_index(n, w, q)], c[pair_index(n, p, w)]))
                        .collect();
                    witnesses.sort_unstable();
                    d.color(Sig::Set2Fwl(c[i], witnesses))
                })
                .collect()
        },
    ))
}

pub fn lgan_hash_refine(g: &Graph, layers: usize) -> Result<Coloring, RefineError> {
    Ok(lgan_hash_refine_joint(&[g], layers)?.pop().expect("one coloring"))
}

/// Hash analogue of one line-graph aggregation layer, applied up to
/// `layers` times.
///
/// Each target `t` is recolored from the multiset of target–neighbor pair
/// colors `{c_t, c_p}` and the multiset of neighbor–neighbor pair colors
/// `{c_p, c_q}` over edges inside `N(t)`. The target's previous color only
/// enters through its pairs. Nodes without incident edges are rehashed from
/// their own color alone.
pub fn lgan_hash_refine_joint(graphs: &[&Graph], layers: usize) -> Result<Vec<Coloring>, RefineError> {
    if layers == 0 {
        return Err(RefineError::NoLayers);
    }
    let mut dict = ColorDictionary::new();
    Ok(run_joint(
        graphs,
        UnitKind::Node,
        Some(layers),
        &mut dict,
        |g, d| initial_node_colors(g, d),
        |g, c, d| {
            (0..g.node_count())
                .map(|t| {
                    let nb = g.neighbors(t);
                    if nb.is_empty() {
                        return d.color(Sig::LganIsolated(c[t]));
                    }
                    let mut target: Vec<(u32, u32)> = nb.iter().map(|&p| sorted_pair(c[t], c[p])).collect();
                    let mut neighbor = Vec::new();
                    for (i, &p) in nb.iter().enumerate() {
                        for &q in &nb[i + 1..] {
                            if g.has_edge(p, q) {
                                neighbor.push(sorted_pair(c[p], c[q]));
                            }
                        }
                    }
                    target.sort_unstable();
                    neighbor.sort_unstable();
                    d.color(Sig::Lgan(target, neighbor))
                })
                .collect()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, cycle, disjoint_union, generate_pair, path, random_relabel, star, PairKind};
    use crate::refine::{distinguishable, StopReason};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_index_enumerates_lexicographically() {
        let units = pair_units(5);
        for (i, &(a, b)) in units.iter().enumerate() {
            assert_eq!(pair_index(5, a, b), i);
            assert_eq!(pair_index(5, b, a), i);
        }
        assert_eq!(units.len(), 10);
    }

    #[test]
    fn wl_on_vertex_transitive_graphs() {
        let (c6, two_k3) = generate_pair(PairKind::OneWlBlind);
        let c = refine_1wl_joint(&[&c6, &two_k3]);
        assert_eq!(c[0].class_sizes(), vec![6]);
        assert_eq!(c[1].class_sizes(), vec![6]);
        assert!(!distinguishable(&c[0], &c[1]).unwrap());
    }

    #[test]
    fn wl_on_claw() {
        let c = refine_1wl(&star(3));
        assert_eq!(c.class_sizes(), vec![1, 3]);
    }

    #[test]
    fn wl_stops_on_stable_partition() {
        // a path needs ~n/2 rounds to separate positions
        let c = refine_1wl(&path(7));
        assert_eq!(c.class_sizes(), vec![1, 2, 2, 2]);
        assert_eq!(c.stop_reason(), StopReason::Stable);
        assert_eq!(c.round(), 3);
    }

    #[test]
    fn set2wl_on_k2_is_immediately_stable() {
        let c = refine_set2wl(&path(2)).unwrap();
        assert_eq!(c.colors().len(), 1);
        assert_eq!(c.round(), 0);
        let f = refine_set2fwl(&path(2)).unwrap();
        assert_eq!(f.round(), 0);
    }

    #[test]
    fn pair_refinements_refuse_tiny_graphs() {
        assert!(matches!(refine_set2wl(&Graph::empty(1)), Err(RefineError::TooFewNodes(..))));
        assert!(matches!(refine_set2fwl(&Graph::empty(0)), Err(RefineError::TooFewNodes(..))));
    }

    #[test]
    fn set2wl_cannot_separate_cycle_from_triangles() {
        let (c6, two_k3) = generate_pair(PairKind::OneWlBlind);
        let c = refine_set2wl_joint(&[&c6, &two_k3]).unwrap();
        assert!(!distinguishable(&c[0], &c[1]).unwrap());
    }

    #[test]
    fn set2fwl_separates_cycle_from_triangles() {
        let (c6, two_k3) = generate_pair(PairKind::OneWlBlind);
        let c = refine_set2fwl_joint(&[&c6, &two_k3]).unwrap();
        assert!(distinguishable(&c[0], &c[1]).unwrap());
    }

    #[test]
    fn pair_tests_separate_triangle_and_claw_by_unit_count() {
        let (k3, claw) = generate_pair(PairKind::WhitneyException);
        let c = refine_set2wl_joint(&[&k3, &claw]).unwrap();
        assert_eq!(c[0].colors().len(), 3);
        assert_eq!(c[1].colors().len(), 6);
        assert!(distinguishable(&c[0], &c[1]).unwrap());
    }

    #[test]
    fn lgan_hash_separates_whitney_pair_in_one_layer() {
        let (k3, claw) = generate_pair(PairKind::WhitneyException);
        let c = lgan_hash_refine_joint(&[&k3, &claw], 1).unwrap();
        // K3: every node sees (2 target pairs, 1 neighbor pair)
        assert_eq!(c[0].class_sizes(), vec![3]);
        // claw: center (3, 0), leaves (1, 0)
        assert_eq!(c[1].class_sizes(), vec![1, 3]);
        assert!(distinguishable(&c[0], &c[1]).unwrap());
        assert_eq!(c[0].round(), 1);
    }

    #[test]
    fn lgan_hash_separates_cycle_from_triangles_in_one_layer() {
        let (c6, two_k3) = generate_pair(PairKind::OneWlBlind);
        let c = lgan_hash_refine_joint(&[&c6, &two_k3], 1).unwrap();
        assert!(distinguishable(&c[0], &c[1]).unwrap());
        assert_eq!(c[0].stop_reason(), StopReason::RoundLimit);
    }

    #[test]
    fn lgan_hash_isolated_nodes_follow_their_own_chain() {
        let g = Graph::empty(3).with_labels(vec![0, 1, 0]).unwrap();
        let c = lgan_hash_refine(&g, 4).unwrap();
        assert_eq!(c.colors()[0], c.colors()[2]);
        assert_ne!(c.colors()[0], c.colors()[1]);
        // the fallback keeps the partition, so the run stabilizes at once
        assert_eq!(c.round(), 0);
        assert_eq!(c.stop_reason(), StopReason::Stable);
        assert!(matches!(lgan_hash_refine(&g, 0), Err(RefineError::NoLayers)));
    }

    #[test]
    fn relabeling_never_changes_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fixtures = [
            cycle(7),
            complete(4),
            disjoint_union(&star(3), &path(4)),
            Graph::new(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap(),
        ];
        for g in &fixtures {
            let (h, _) = random_relabel(g, &mut rng);
            let w = refine_1wl_joint(&[g, &h]);
            assert!(!distinguishable(&w[0], &w[1]).unwrap());
            let s = refine_set2wl_joint(&[g, &h]).unwrap();
            assert!(!distinguishable(&s[0], &s[1]).unwrap());
            let f = refine_set2fwl_joint(&[g, &h]).unwrap();
            assert!(!distinguishable(&f[0], &f[1]).unwrap());
            let l = lgan_hash_refine_joint(&[g, &h], g.node_count()).unwrap();
            assert!(!distinguishable(&l[0], &l[1]).unwrap());
        }
    }
}
