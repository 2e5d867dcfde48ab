//! Color refinement: 1-WL, set-based 2-WL and 2-FWL over unordered pairs,
//! and the discrete (hash) analogue of line-graph aggregation.
//!
//! Colors are only comparable inside one run, so every algorithm has a
//! `*_joint` form that refines a batch of graphs against one shared
//! [`ColorDictionary`] and stops when the partition of the whole batch stops
//! changing. The single-graph functions are thin wrappers.

mod algorithms;
mod expressivity;

pub use algorithms::{
    lgan_hash_refine, lgan_hash_refine_joint, pair_index, pair_units, refine_1wl, refine_1wl_joint, refine_set2fwl,
    refine_set2fwl_joint, refine_set2wl, refine_set2wl_joint,
};
pub use expressivity::{
    find_witness, hierarchy_check, report_enumeration, report_pair, write_report_csv, HierarchyReport, PairReport,
    WitnessOutcome, MAX_REPORT_NODES,
};

use crate::graph::GraphError;
use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("{0} needs at least 2 nodes, got {1}")]
    TooFewNodes(&'static str, usize),
    #[error("colorings have different unit kinds ({0:?} vs {1:?})")]
    UnitKindMismatch(UnitKind, UnitKind),
    #[error("colorings come from different refinement runs; colors are not comparable")]
    DifferentRuns,
    #[error("layers must be at least 1")]
    NoLayers,
    #[error("enumeration is limited to {limit} nodes, got {got}")]
    TooLarge { limit: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitKind {
    Node,
    UnorderedPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The joint partition stopped changing.
    Stable,
    /// The round budget ran out first.
    RoundLimit,
}

/// Injective map from signatures to fresh color ids.
#[derive(Debug)]
pub struct ColorDictionary<S> {
    table: HashMap<S, u32>,
}

impl<S: Hash + Eq> ColorDictionary<S> {
    pub fn new() -> Self {
        ColorDictionary { table: HashMap::new() }
    }

    pub fn color(&mut self, sig: S) -> u32 {
        let next = self.table.len() as u32;
        *self.table.entry(sig).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<S: Hash + Eq> Default for ColorDictionary<S> {
    fn default() -> Self {
        Self::new()
    }
}

static NEXT_RUN: AtomicU64 = AtomicU64::new(1);

fn next_run_id() -> u64 {
    NEXT_RUN.fetch_add(1, Ordering::Relaxed)
}

/// Stable (or round-limited) coloring of one graph's units.
///
/// Node units are indexed by node id; pair units `{a, b}` (`a < b`) by
/// [`pair_index`].
#[derive(Clone, Debug)]
pub struct Coloring {
    kind: UnitKind,
    colors: Vec<u32>,
    round: usize,
    stop: StopReason,
    run: u64,
    /// Distinct colors of this graph at rounds `0..=round`.
    class_history: Vec<usize>,
}

impl Coloring {
    pub fn kind(&self) -> UnitKind {
        self.kind
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    pub fn class_history(&self) -> &[usize] {
        &self.class_history
    }

    pub fn class_count(&self) -> usize {
        self.histogram().len()
    }

    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for &c in &self.colors {
            *h.entry(c).or_insert(0) += 1;
        }
        h
    }

    /// Class sizes, sorted; comparable across runs, unlike color ids.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.histogram().into_values().collect();
        s.sort_unstable();
        s
    }
}

/// True iff the two colorings' histograms differ as multisets.
pub fn distinguishable(a: &Coloring, b: &Coloring) -> Result<bool, RefineError> {
    if a.kind != b.kind {
        return Err(RefineError::UnitKindMismatch(a.kind, b.kind));
    }
    if a.run != b.run {
        return Err(RefineError::DifferentRuns);
    }
    Ok(a.histogram() != b.histogram())
}

fn distinct(colors: impl Iterator<Item = u32>) -> usize {
    let mut v: Vec<u32> = colors.collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Whether two colorings of the same units induce the same partition.
fn same_partition(old: &[Vec<u32>], new: &[Vec<u32>]) -> bool {
    let mut forward: HashMap<u32, u32> = HashMap::new();
    let mut backward: HashMap<u32, u32> = HashMap::new();
    for (o, n) in old.iter().flatten().zip(new.iter().flatten()) {
        if *forward.entry(*o).or_insert(*n) != *n || *backward.entry(*n).or_insert(*o) != *o {
            return false;
        }
    }
    true
}

/// Shared driver: refine every graph's units in lock-step until the joint
/// partition is unchanged or `max_rounds` updates have run.
pub(crate) fn run_joint<G, S>(
    graphs: &[G],
    kind: UnitKind,
    max_rounds: Option<usize>,
    dict: &mut ColorDictionary<S>,
    mut init: impl FnMut(&G, &mut ColorDictionary<S>) -> Vec<u32>,
    mut step: impl FnMut(&G, &[u32], &mut ColorDictionary<S>) -> Vec<u32>,
) -> Vec<Coloring>
where
    S: Hash + Eq,
{
    let mut current: Vec<Vec<u32>> = graphs.iter().map(|g| init(g, dict)).collect();
    let mut history: Vec<Vec<usize>> = current.iter().map(|c| vec![distinct(c.iter().copied())]).collect();
    let mut round = 0;
    let stop = loop {
        if max_rounds.is_some_and(|m| round >= m) {
            break StopReason::RoundLimit;
        }
        let next: Vec<Vec<u32>> = graphs.iter().zip(&current).map(|(g, c)| step(g, c, dict)).collect();
        if same_partition(&current, &next) {
            break StopReason::Stable;
        }
        current = next;
        round += 1;
        for (h, c) in history.iter_mut().zip(&current) {
            h.push(distinct(c.iter().copied()));
        }
    };

    // compact ids by first occurrence over the whole run
    let mut compact: HashMap<u32, u32> = HashMap::new();
    let run = next_run_id();
    current
        .into_iter()
        .zip(history)
        .map(|(colors, class_history)| {
            let colors = colors
                .into_iter()
                .map(|c| {
                    let next = compact.len() as u32;
                    *compact.entry(c).or_insert(next)
                })
                .collect();
            Coloring { kind, colors, round, stop, run, class_history }
        })
        .collect()
}
