//! Comparisons between refinement tests over fixed pairs and exhaustively
//! enumerated small graphs.

use super::{
    distinguishable, lgan_hash_refine_joint, refine_1wl_joint, refine_set2fwl_joint, refine_set2wl_joint, Coloring,
    RefineError,
};
use crate::graph::{
    brute_force_isomorphic, enumerate_graphs, generate_pair, random_relabel, Graph, PairKind, BRUTE_FORCE_MAX_NODES,
};
use rand::Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::io::Write;

/// Largest node count accepted by [`report_enumeration`].
pub const MAX_REPORT_NODES: usize = 7;

/// One CSV row: which tests tell the two graphs apart.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub pair_id: String,
    pub n: String,
    pub iso: bool,
    #[serde(rename = "1wl")]
    pub onewl: bool,
    pub set2wl: bool,
    pub set2fwl: bool,
    pub lgan_hash: bool,
}

#[derive(Clone, Debug)]
pub enum WitnessOutcome {
    /// Set-based 2-WL cannot tell `g` from `h`; the line-graph hash can.
    Found { g: Graph, h: Graph, pairs_checked: usize },
    /// Every candidate pair was checked without finding one.
    Exhausted { pairs_checked: usize },
}

impl WitnessOutcome {
    pub fn pair(&self) -> Option<(&Graph, &Graph)> {
        match self {
            WitnessOutcome::Found { g, h, .. } => Some((g, h)),
            WitnessOutcome::Exhausted { .. } => None,
        }
    }
}

/// Per-graph stable colorings of one joint run, for every test.
struct BatchColorings {
    onewl: Vec<Coloring>,
    set2wl: Vec<Coloring>,
    set2fwl: Vec<Coloring>,
    lgan: Vec<Coloring>,
}

impl BatchColorings {
    fn compute(graphs: &[&Graph], layers: usize, with_all: bool) -> Result<Self, RefineError> {
        let set2wl = refine_set2wl_joint(graphs)?;
        let lgan = lgan_hash_refine_joint(graphs, layers)?;
        let (onewl, set2fwl) =
            if with_all { (refine_1wl_joint(graphs), refine_set2fwl_joint(graphs)?) } else { (Vec::new(), Vec::new()) };
        Ok(BatchColorings { onewl, set2wl, set2fwl, lgan })
    }

    fn row(&self, pair_id: String, n: String, iso: bool, i: usize, j: usize) -> Result<PairReport, RefineError> {
        Ok(PairReport {
            pair_id,
            n,
            iso,
            onewl: distinguishable(&self.onewl[i], &self.onewl[j])?,
            set2wl: distinguishable(&self.set2wl[i], &self.set2wl[j])?,
            set2fwl: distinguishable(&self.set2fwl[i], &self.set2fwl[j])?,
            lgan_hash: distinguishable(&self.lgan[i], &self.lgan[j])?,
        })
    }
}

fn size_label(g: &Graph, h: &Graph) -> String {
    if g.node_count() == h.node_count() {
        g.node_count().to_string()
    } else {
        format!("{}|{}", g.node_count(), h.node_count())
    }
}

fn compare_pair(pair_id: String, g: &Graph, h: &Graph) -> Result<PairReport, RefineError> {
    let layers = g.node_count().max(h.node_count()).max(1);
    let batch = BatchColorings::compute(&[g, h], layers, true)?;
    let iso = brute_force_isomorphic(g, h)?;
    batch.row(pair_id, size_label(g, h), iso, 0, 1)
}

/// Runs every test on one of the fixed fixture pairs.
pub fn report_pair(kind: PairKind) -> Result<PairReport, RefineError> {
    let (g, h) = generate_pair(kind);
    compare_pair(kind.name().to_string(), &g, &h)
}

/// Rows for every pair of non-isomorphic graphs with the same node count
/// `2..=max_nodes`, plus one row per graph against a random relabeling of
/// itself (the soundness rows, `iso = true`), plus a trailing witness row if
/// one exists within the bound.
pub fn report_enumeration<R: Rng + ?Sized>(max_nodes: usize, rng: &mut R) -> Result<Vec<PairReport>, RefineError> {
    if max_nodes > MAX_REPORT_NODES {
        return Err(RefineError::TooLarge { limit: MAX_REPORT_NODES, got: max_nodes });
    }
    let mut rows = Vec::new();
    for n in 2..=max_nodes {
        let graphs = enumerate_graphs(n);
        let copies: Vec<Graph> = graphs.iter().map(|g| random_relabel(g, rng).0).collect();
        let all: Vec<&Graph> = graphs.iter().chain(&copies).collect();
        let batch = BatchColorings::compute(&all, n, true)?;
        let k = graphs.len();
        for i in 0..k {
            rows.push(batch.row(format!("n{n}:{i}~{i}"), n.to_string(), true, i, k + i)?);
        }
        for i in 0..k {
            for j in i + 1..k {
                rows.push(batch.row(format!("n{n}:{i}-{j}"), n.to_string(), false, i, j)?);
            }
        }
    }
    if let WitnessOutcome::Found { g, h, .. } = find_witness(max_nodes)? {
        rows.push(compare_pair("witness".to_string(), &g, &h)?);
    }
    Ok(rows)
}

pub fn write_report_csv<W: Write>(rows: &[PairReport], out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "pair_id,n,iso,1wl,set2wl,set2fwl,lgan_hash")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{},{}", r.pair_id, r.n, r.iso, r.onewl, r.set2wl, r.set2fwl, r.lgan_hash)?;
    }
    out.flush()
}

/// Graphs on `n` nodes, one per isomorphism class, whose every ego network
/// has at least one edge.
fn candidates(n: usize) -> Vec<Graph> {
    enumerate_graphs(n).into_iter().filter(|g| !g.has_isolated_node()).collect()
}

/// Searches for a pair that set-based 2-WL cannot distinguish but the
/// line-graph hash (with `layers = n`) can.
///
/// The canonical `(C6, 2×K3)` pair is tried first when it fits the bound;
/// after that, all pairs of non-isomorphic graphs without isolated nodes in
/// increasing node count and enumeration order.
pub fn find_witness(max_nodes: usize) -> Result<WitnessOutcome, RefineError> {
    if max_nodes > BRUTE_FORCE_MAX_NODES {
        return Err(RefineError::TooLarge { limit: BRUTE_FORCE_MAX_NODES, got: max_nodes });
    }
    let mut checked = 0;
    if max_nodes >= 6 {
        let (g, h) = generate_pair(PairKind::OneWlBlind);
        checked += 1;
        let batch = BatchColorings::compute(&[&g, &h], 6, false)?;
        if !distinguishable(&batch.set2wl[0], &batch.set2wl[1])?
            && distinguishable(&batch.lgan[0], &batch.lgan[1])?
            && !brute_force_isomorphic(&g, &h)?
        {
            return Ok(WitnessOutcome::Found { g, h, pairs_checked: checked });
        }
    }
    for n in 2..=max_nodes {
        let graphs = candidates(n);
        let refs: Vec<&Graph> = graphs.iter().collect();
        if refs.len() < 2 {
            continue;
        }
        let batch = BatchColorings::compute(&refs, n, false)?;
        for i in 0..graphs.len() {
            for j in i + 1..graphs.len() {
                checked += 1;
                if !distinguishable(&batch.set2wl[i], &batch.set2wl[j])?
                    && distinguishable(&batch.lgan[i], &batch.lgan[j])?
                {
                    return Ok(WitnessOutcome::Found {
                        g: graphs[i].clone(),
                        h: graphs[j].clone(),
                        pairs_checked: checked,
                    });
                }
            }
        }
    }
    Ok(WitnessOutcome::Exhausted { pairs_checked: checked })
}

/// Tallies for the pairwise comparison of the tests over all graphs without
/// isolated nodes on `2..=max_nodes` nodes.
#[derive(Clone, Debug, Default)]
pub struct HierarchyReport {
    pub graphs: usize,
    pub pairs: usize,
    pub set2wl_distinguished: usize,
    pub set2fwl_distinguished: usize,
    pub lgan_distinguished: usize,
    /// Pairs set-based 2-WL separates but the line-graph hash does not.
    pub lgan_misses: Vec<(Graph, Graph)>,
    /// Pairs set-based 2-WL separates but set-based 2-FWL does not.
    pub fwl_misses: Vec<(Graph, Graph)>,
    /// Pairs only the line-graph hash separates (relative to set-based 2-WL).
    pub lgan_only: usize,
}

/// Compares set-based 2-WL, set-based 2-FWL and the line-graph hash
/// (`layers = n`) on every pair of candidate graphs with equal node count.
///
/// Pairs with different node counts are separated by every test through
/// their unit counts, so only equal-size pairs are tallied. Work is grouped
/// by 2-WL class so the pass is linear in the number of graphs.
pub fn hierarchy_check(max_nodes: usize) -> Result<HierarchyReport, RefineError> {
    if max_nodes > BRUTE_FORCE_MAX_NODES {
        return Err(RefineError::TooLarge { limit: BRUTE_FORCE_MAX_NODES, got: max_nodes });
    }
    let mut report = HierarchyReport::default();
    for n in 2..=max_nodes {
        let graphs = candidates(n);
        let refs: Vec<&Graph> = graphs.iter().collect();
        if refs.is_empty() {
            continue;
        }
        let batch = BatchColorings::compute(&refs, n, false)?;
        let fwl = refine_set2fwl_joint(&refs)?;
        let key = |c: &Coloring| c.histogram().into_iter().collect::<Vec<_>>();
        let s2: Vec<_> = batch.set2wl.iter().map(key).collect();
        let f2: Vec<_> = fwl.iter().map(key).collect();
        let lg: Vec<_> = batch.lgan.iter().map(key).collect();

        let k = graphs.len();
        report.graphs += k;
        let pairs = k * (k - 1) / 2;
        report.pairs += pairs;

        // equal-key pair counts for a grouping
        let same_pairs = |keys: &[Vec<(u32, usize)>]| -> usize {
            let mut groups: HashMap<&Vec<(u32, usize)>, usize> = HashMap::new();
            for key in keys {
                *groups.entry(key).or_insert(0) += 1;
            }
            groups.values().map(|&c| c * (c - 1) / 2).sum()
        };
        let joint_s2_lg: Vec<Vec<(u32, usize)>> =
            s2.iter().zip(&lg).map(|(a, b)| a.iter().chain(&[(u32::MAX, 0)]).chain(b).copied().collect()).collect();
        let both_equal = same_pairs(&joint_s2_lg);
        report.set2wl_distinguished += pairs - same_pairs(&s2);
        report.set2fwl_distinguished += pairs - same_pairs(&f2);
        report.lgan_distinguished += pairs - same_pairs(&lg);
        report.lgan_only += same_pairs(&s2) - both_equal;

        // explicit counterexamples: same lgan key, different 2-WL / 2-FWL key
        for i in 0..k {
            for j in i + 1..k {
                if s2[i] != s2[j] && lg[i] == lg[j] {
                    report.lgan_misses.push((graphs[i].clone(), graphs[j].clone()));
                }
                if s2[i] != s2[j] && f2[i] == f2[j] {
                    report.fwl_misses.push((graphs[i].clone(), graphs[j].clone()));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn onewl_blind_row() {
        let r = report_pair(PairKind::OneWlBlind).unwrap();
        assert!(!r.iso);
        assert!(!r.onewl);
        assert!(!r.set2wl);
        assert!(r.set2fwl);
        assert!(r.lgan_hash);
    }

    #[test]
    fn whitney_row() {
        let r = report_pair(PairKind::WhitneyException).unwrap();
        assert_eq!(r.n, "3|4");
        assert!(r.lgan_hash);
        assert!(!r.iso);
    }

    #[test]
    fn no_witness_below_three_nodes() {
        assert!(matches!(find_witness(2).unwrap(), WitnessOutcome::Exhausted { .. }));
    }

    #[test]
    fn canonical_pair_is_the_six_node_witness() {
        let out = find_witness(6).unwrap();
        let (g, h) = out.pair().expect("witness");
        assert_eq!(g, &generate_pair(PairKind::OneWlBlind).0);
        assert!(!brute_force_isomorphic(g, h).unwrap());
    }

    #[test]
    fn enumeration_report_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rows = report_enumeration(4, &mut rng).unwrap();
        // 1 + 2 + 4 + 11 graphs on 2..=4 nodes; graphs with one node are skipped
        let iso_rows: Vec<_> = rows.iter().filter(|r| r.iso).collect();
        assert_eq!(iso_rows.len(), 2 + 4 + 11);
        for r in iso_rows {
            assert!(!(r.onewl || r.set2wl || r.set2fwl || r.lgan_hash), "{r:?}");
        }
        assert!(report_enumeration(8, &mut rng).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let r = report_pair(PairKind::OneWlBlind).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("pair_id,n,iso,1wl,set2wl,set2fwl,lgan_hash"));
        assert_eq!(lines.next(), Some("onewl_blind,6,false,false,false,true,true"));
    }

    #[test]
    fn hierarchy_holds_up_to_six_nodes() {
        let r = hierarchy_check(6).unwrap();
        assert!(r.lgan_misses.is_empty());
        assert!(r.fwl_misses.is_empty());
        assert!(r.lgan_only > 0);
    }
}
