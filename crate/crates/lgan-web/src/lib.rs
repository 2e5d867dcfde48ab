//! wasm-bindgen bindings for the browser demo. Each export is a thin wrapper
//! over a pure function that returns JSON text, so the logic is testable
//! natively.

use lgan::graph::{brute_force_isomorphic, generate_pair, line_graph, PairKind, BRUTE_FORCE_MAX_NODES};
use lgan::model::message_counts;
use lgan::refine::{
    find_witness, lgan_hash_refine_joint, refine_1wl_joint, refine_set2fwl_joint, refine_set2wl_joint, WitnessOutcome,
};
use lgan::{distinguishable, Graph, GraphSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page will refine; keeps pair refinement interactive.
pub const MAX_NODES: usize = 40;

/// Parses an edge list: one `u v` (or `u-v`) per line, `#` comments, and an
/// optional `nodes N` line for isolated trailing nodes.
pub fn parse_edge_list(text: &str) -> Result<Graph, String> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("nodes") {
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("line {}: bad node count `{}`", i + 1, rest.trim()))?;
            declared = Some(n);
            continue;
        }
        let parts: Vec<&str> =
            line.split(|c: char| c.is_whitespace() || c == '-' || c == ',').filter(|s| !s.is_empty()).collect();
        let [u, v] = parts.as_slice() else {
            return Err(format!("line {}: expected two node ids, got `{line}`", i + 1));
        };
        let id = |s: &str| s.parse::<usize>().map_err(|_| format!("line {}: `{s}` is not a node id", i + 1));
        edges.push((id(u)?, id(v)?));
    }
    let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < implied => return Err(format!("`nodes {n}` but edges mention node {}", implied - 1)),
        Some(n) => n,
        None => implied,
    };
    if n > MAX_NODES {
        return Err(format!("the demo is limited to {MAX_NODES} nodes, got {n}"));
    }
    Graph::new(n, edges).map_err(|e| e.to_string())
}

fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("nodes {}\n", g.node_count());
    for &(u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[derive(Serialize)]
struct Preset {
    g: String,
    h: String,
    note: &'static str,
}

/// Edge-list text for one of the built-in pairs.
pub fn preset_json(kind: &str) -> Result<String, String> {
    let kind: PairKind = kind.parse().map_err(|e: lgan::graph::GraphError| e.to_string())?;
    let (g, h) = generate_pair(kind);
    let note = match kind {
        PairKind::OneWlBlind => {
            "Both 2-regular on 6 nodes: 1-WL and set-based 2-WL agree, the line-graph hash does not."
        }
        PairKind::WhitneyException => "The triangle and the claw share the line graph K3.",
        PairKind::TriangleFlag => "The second graph is the first minus the chord 0-2.",
    };
    Ok(serde_json::to_string(&Preset { g: to_edge_list(&g), h: to_edge_list(&h), note }).expect("serializable"))
}

#[derive(Serialize)]
struct Comparison {
    isomorphic: Option<bool>,
    onewl: bool,
    set2wl: bool,
    set2fwl: bool,
    lgan_hash: bool,
    layers: usize,
    /// Stable node colors from a shared dictionary, so equal ids mean equal colors across graphs.
    onewl_colors: [Vec<u32>; 2],
    lgan_colors: [Vec<u32>; 2],
    message_counts: [(usize, usize); 2],
    g: GraphSpec,
    h: GraphSpec,
}

/// Runs every refinement test on the pair. `true` means "distinguishes".
pub fn compare_json(a: &str, b: &str, layers: usize) -> Result<String, String> {
    let g = parse_edge_list(a).map_err(|e| format!("graph A: {e}"))?;
    let h = parse_edge_list(b).map_err(|e| format!("graph B: {e}"))?;
    let layers = if layers == 0 { g.node_count().max(h.node_count()).max(1) } else { layers };
    let pair = [&g, &h];
    let e = |e: lgan::refine::RefineError| e.to_string();
    let wl = refine_1wl_joint(&pair);
    let s2 = refine_set2wl_joint(&pair).map_err(e)?;
    let f2 = refine_set2fwl_joint(&pair).map_err(e)?;
    let lg = lgan_hash_refine_joint(&pair, layers).map_err(e)?;
    let isomorphic = if g.node_count().max(h.node_count()) <= BRUTE_FORCE_MAX_NODES {
        Some(brute_force_isomorphic(&g, &h).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let out = Comparison {
        isomorphic,
        onewl: distinguishable(&wl[0], &wl[1]).map_err(e)?,
        set2wl: distinguishable(&s2[0], &s2[1]).map_err(e)?,
        set2fwl: distinguishable(&f2[0], &f2[1]).map_err(e)?,
        lgan_hash: distinguishable(&lg[0], &lg[1]).map_err(e)?,
        layers,
        onewl_colors: [wl[0].colors().to_vec(), wl[1].colors().to_vec()],
        lgan_colors: [lg[0].colors().to_vec(), lg[1].colors().to_vec()],
        message_counts: [message_counts(&g), message_counts(&h)],
        g: GraphSpec::from(&g),
        h: GraphSpec::from(&h),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[derive(Serialize)]
struct LineView {
    graph: GraphSpec,
    /// Line-graph node `i` is base edge `base_edges[i]`.
    base_edges: Vec<(usize, usize)>,
    line_edges: Vec<(usize, usize)>,
    target: Option<usize>,
    /// Base edges touching the target (target–neighbor pairs).
    target_pairs: Vec<usize>,
    /// Base edges inside the target's neighborhood (neighbor–neighbor pairs).
    neighbor_pairs: Vec<usize>,
    message_counts: (usize, usize),
}

/// Line graph of `text` plus the two pair sets one layer aggregates at `target`.
pub fn line_view_json(text: &str, target: Option<usize>) -> Result<String, String> {
    let g = parse_edge_list(text)?;
    if let Some(t) = target {
        if t >= g.node_count() {
            return Err(format!("target {t} is not a node (graph has {})", g.node_count()));
        }
    }
    let l = line_graph(&g);
    let (mut target_pairs, mut neighbor_pairs) = (Vec::new(), Vec::new());
    if let Some(t) = target {
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            if u == t || v == t {
                target_pairs.push(i);
            } else if g.has_edge(t, u) && g.has_edge(t, v) {
                neighbor_pairs.push(i);
            }
        }
    }
    let out = LineView {
        graph: GraphSpec::from(&g),
        base_edges: l.base_edges().to_vec(),
        line_edges: l.edges().to_vec(),
        target,
        target_pairs,
        neighbor_pairs,
        message_counts: message_counts(&g),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

/// Witness search as edge-list text for both graphs.
pub fn witness_json(max_nodes: usize) -> Result<String, String> {
    match find_witness(max_nodes).map_err(|e| e.to_string())? {
        WitnessOutcome::Found { g, h, pairs_checked } => Ok(serde_json::json!({
            "found": true,
            "pairs_checked": pairs_checked,
            "g": to_edge_list(&g),
            "h": to_edge_list(&h),
        })
        .to_string()),
        WitnessOutcome::Exhausted { pairs_checked } => {
            Ok(serde_json::json!({ "found": false, "pairs_checked": pairs_checked }).to_string())
        }
    }
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn preset(kind: &str) -> Result<String, JsError> {
    js(preset_json(kind))
}

#[wasm_bindgen]
pub fn compare(a: &str, b: &str, layers: usize) -> Result<String, JsError> {
    js(compare_json(a, b, layers))
}

#[wasm_bindgen]
pub fn line_view(text: &str, target: Option<usize>) -> Result<String, JsError> {
    js(line_view_json(text, target))
}

#[wasm_bindgen]
pub fn witness(max_nodes: usize) -> Result<String, JsError> {
    js(witness_json(max_nodes))
}
