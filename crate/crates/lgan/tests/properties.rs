use lgan::attribution::normalized_weights;
use lgan::graph::{canonical_code, degree_one_hot, line_graph, parse_tu_dataset, write_tu_dataset};
use lgan::model::{message_counts, LganConfig, LganModel, Readout, Variant};
use lgan::refine::{lgan_hash_refine_joint, refine_1wl_joint, refine_set2fwl_joint, refine_set2wl_joint};
use lgan::train::stratified_kfold;
use lgan::{distinguishable, Dataset, Graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random simple graph on `lo..=hi` nodes.
fn graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    (lo..=hi).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |bits| {
            let all = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            Graph::new(n, all.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e)).unwrap()
        })
    })
}

fn with_perm(lo: usize, hi: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
    graph(lo, hi).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn triangles(g: &Graph) -> usize {
    let mut t = 0;
    for &(u, v) in g.edges() {
        t += (0..g.node_count()).filter(|&w| w > v && g.has_edge(u, w) && g.has_edge(v, w)).count();
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinements_cannot_tell_a_graph_from_its_relabeling((g, perm) in with_perm(2, 7)) {
        let h = g.permuted(&perm);
        let pair = [&g, &h];
        let wl = refine_1wl_joint(&pair);
        prop_assert!(!distinguishable(&wl[0], &wl[1]).unwrap());
        let s2 = refine_set2wl_joint(&pair).unwrap();
        prop_assert!(!distinguishable(&s2[0], &s2[1]).unwrap());
        let f2 = refine_set2fwl_joint(&pair).unwrap();
        prop_assert!(!distinguishable(&f2[0], &f2[1]).unwrap());
        let lg = lgan_hash_refine_joint(&pair, g.node_count()).unwrap();
        prop_assert!(!distinguishable(&lg[0], &lg[1]).unwrap());
        prop_assert_eq!(canonical_code(&g), canonical_code(&h));
    }

    #[test]
    fn line_graph_sizes(g in graph(1, 12)) {
        let l = line_graph(&g);
        prop_assert_eq!(l.node_count(), g.edge_count());
        let expected: usize = (0..g.node_count()).map(|v| g.degree(v) * g.degree(v).saturating_sub(1) / 2).sum();
        prop_assert_eq!(l.edges().len(), expected);
    }

    #[test]
    fn message_counts_follow_edges_and_triangles((g, perm) in with_perm(1, 14)) {
        let (tn, nn) = message_counts(&g);
        prop_assert_eq!(tn, 2 * g.edge_count());
        prop_assert_eq!(nn, 3 * triangles(&g));
        prop_assert_eq!(message_counts(&g.permuted(&perm)), (tn, nn));
        let bound: usize = (0..g.node_count()).map(|v| g.degree(v) * g.degree(v).saturating_sub(1) / 2).sum();
        prop_assert!(nn <= bound);
    }

    #[test]
    fn kfold_is_a_balanced_partition(labels in proptest::collection::vec(0usize..3, 30..80), k in 2usize..6, seed: u64) {
        let mut counts = [0usize; 3];
        for &l in &labels {
            counts[l] += 1;
        }
        prop_assume!(counts.iter().all(|&c| c == 0 || c >= k));
        let fold = stratified_kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(fold.len(), labels.len());
        prop_assert!(fold.iter().all(|&f| f < k));
        for c in 0..3 {
            let per: Vec<usize> = (0..k).map(|f| labels.iter().zip(&fold).filter(|&(&l, &x)| l == c && x == f).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1, "class {} spread {:?}", c, per);
        }
        prop_assert_eq!(stratified_kfold(&labels, k, seed).unwrap(), fold);
    }

    #[test]
    fn normalized_weights_peak_at_one(scores in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
        let w = normalized_weights(&scores);
        let max = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if max == 0.0 {
            prop_assert!(w.iter().all(|&x| x == 0.0));
        } else {
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(w.contains(&1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn logits_are_relabeling_invariant((g, perm) in with_perm(1, 12), residual: bool, mean: bool, seed in 0u64..1000) {
        let cfg = LganConfig {
            layers: 2,
            hidden_dim: 6,
            variant: if residual { Variant::Residual } else { Variant::Plain },
            readout: if mean { Readout::Mean } else { Readout::Sum },
            classifier_hidden: 5,
            ..LganConfig::default()
        };
        let model = LganModel::new(cfg, 12, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let enc = |g: Graph| {
            let x = degree_one_hot(&g, 11).unwrap();
            g.with_features(x).unwrap()
        };
        let h = enc(g.permuted(&perm));
        prop_assert_eq!(model.logits(&enc(g)).unwrap(), model.logits(&h).unwrap());
    }

    #[test]
    fn tu_files_round_trip(graphs in proptest::collection::vec(graph(1, 8), 1..6)) {
        let labels: Vec<usize> = (0..graphs.len()).map(|i| i % 2).collect();
        let graphs: Vec<Graph> = graphs
            .into_iter()
            .map(|g| {
                let n = g.node_count();
                g.with_labels((0..n as u32).map(|v| v % 3).collect()).unwrap()
            })
            .collect();
        let ds = Dataset::new("RT", graphs, labels);
        let dir = tempfile::tempdir().unwrap();
        write_tu_dataset(&ds, dir.path()).unwrap();
        let back = parse_tu_dataset(dir.path(), "RT").unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in ds.graphs.iter().zip(&back.graphs) {
            prop_assert_eq!(a.node_count(), b.node_count());
            prop_assert_eq!(a.edges(), b.edges());
            prop_assert_eq!(a.node_labels(), b.node_labels());
        }
    }
}
