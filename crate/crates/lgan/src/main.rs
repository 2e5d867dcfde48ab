use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lgan::attribution::{export_annotated, ig_edge_attribution};
use lgan::bench::{bench_graphs, er_sweep, fit_rows, rows_csv, DEFAULT_SWEEP};
use lgan::graph::{generate_pair, Dataset, FeatureEncoder, Graph, GraphSpec, PairKind};
use lgan::model::LganModel;
use lgan::refine::{find_witness, report_enumeration, report_pair, write_report_csv, WitnessOutcome, MAX_REPORT_NODES};
use lgan::train::{
    accuracy, cross_validate, encode_dataset, load_dataset, train_model, write_report, ExperimentConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Line-graph aggregation networks: refinement reports, training, attribution
/// and complexity benchmarks.
#[derive(Parser, Debug)]
#[command(name = "lgan", version)]
struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root under which timestamped run directories are created.
    #[arg(long, global = true, env = "LGAN_OUTPUT_ROOT", default_value = "results")]
    output_root: PathBuf,
    /// Folder holding TU datasets (`<root>/<NAME>/<NAME>_A.txt`, ...).
    #[arg(long, global = true, env = "LGAN_DATA_ROOT")]
    data_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a dataset and summarize it.
    Parse {
        /// TU folder name under the data root, or `synthetic:<name>`.
        dataset: String,
    },
    /// Which refinement tests distinguish a fixture pair or all small graphs.
    WlReport {
        #[arg(long, conflicts_with = "enumerate", required_unless_present = "enumerate")]
        pair: Option<PairKind>,
        /// Enumerate all graphs up to this many nodes (at most 7).
        #[arg(long)]
        enumerate: Option<usize>,
    },
    /// Search for a pair set-based 2-WL misses but the line-graph hash separates.
    Witness {
        #[arg(long, default_value_t = 7)]
        max_nodes: usize,
    },
    /// Stratified k-fold cross-validation from a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Folds trained in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also train one model on the whole dataset (`model.json`).
        #[arg(long)]
        save_full: bool,
    },
    /// Accuracy of a checkpoint on a dataset.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: String,
    },
    /// Integrated-Gradients edge scores for one graph.
    Attribute {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset index, or `pair:<kind>[:<0|1>]` for a fixture graph.
        #[arg(long)]
        graph: String,
        #[arg(long, default_value = "MUTAG")]
        dataset: String,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Class whose logit is attributed (default: predicted class).
        #[arg(long)]
        target: Option<usize>,
    },
    /// Message counts and per-layer timing.
    Bench {
        /// `er_sweep`, `pair:<kind>`, `synthetic:<name>` or a TU folder name.
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 32)]
        hidden: usize,
        #[arg(long, default_value_t = 7)]
        reps: usize,
        #[arg(long)]
        no_timing: bool,
    },
}

/// Writes to stdout; a closed pipe (`lgan ... | head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

macro_rules! emitln {
    ($($arg:tt)*) => {
        emit(&format!("{}\n", format_args!($($arg)*)))
    };
}

/// Bad invocation rather than a failed computation (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

struct Ctx {
    seed: u64,
    output_root: PathBuf,
    data_root: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        output_root: cli.output_root,
        data_root: cli.data_root.clone().unwrap_or_else(|| PathBuf::from("data")),
    };
    match cli.command {
        Command::Parse { dataset } => parse(&ctx, &dataset),
        Command::WlReport { pair, enumerate } => wl_report(&ctx, pair, enumerate),
        Command::Witness { max_nodes } => witness(&ctx, max_nodes),
        Command::Train { config, jobs, save_full } => train(&ctx, cli.seed, cli.data_root, &config, jobs, save_full),
        Command::Evaluate { checkpoint, dataset } => evaluate(&ctx, &checkpoint, &dataset),
        Command::Attribute { checkpoint, graph, dataset, steps, target } => {
            attribute(&ctx, &checkpoint, &graph, &dataset, steps, target)
        }
        Command::Bench { dataset, hidden, reps, no_timing } => bench(&ctx, &dataset, hidden, reps, no_timing),
    }
}

/// Creates `<root>/<group>/<UTC timestamp>` and writes the manifest into it.
fn start_run(ctx: &Ctx, group: &str, command: &str, resolved: serde_json::Value) -> Result<PathBuf> {
    let group: String =
        group.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = ctx.output_root.join(group);
    let mut dir = base.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = json!({
        "command": command,
        "seed": ctx.seed,
        "resolved": resolved,
        "version": env!("CARGO_PKG_VERSION"),
        "created_utc": stamp,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn dataset(ctx: &Ctx, name: &str) -> Result<Dataset> {
    load_dataset(name, &ctx.data_root, ctx.seed).with_context(|| format!("loading dataset `{name}`"))
}

fn parse(ctx: &Ctx, name: &str) -> Result<()> {
    let ds = dataset(ctx, name)?;
    let n = ds.len().max(1) as f64;
    let summary = json!({
        "name": ds.name,
        "graphs": ds.len(),
        "classes": ds.num_classes,
        "class_counts": ds.class_counts(),
        "mean_nodes": ds.graphs.iter().map(Graph::node_count).sum::<usize>() as f64 / n,
        "mean_edges": ds.graphs.iter().map(Graph::edge_count).sum::<usize>() as f64 / n,
        "edgeless_graphs": ds.graphs.iter().filter(|g| g.edge_count() == 0).count(),
        "encoder": FeatureEncoder::for_dataset(&ds),
    });
    let dir = start_run(ctx, "parse", "parse", json!({ "dataset": name, "data_root": ctx.data_root }))?;
    write_json(&dir.join("summary.json"), &summary)?;
    emitln!("{}", serde_json::to_string_pretty(&summary)?);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn wl_report(ctx: &Ctx, pair: Option<PairKind>, enumerate: Option<usize>) -> Result<()> {
    let rows = match (pair, enumerate) {
        (Some(kind), _) => vec![report_pair(kind)?],
        (None, Some(n)) => {
            if n > MAX_REPORT_NODES {
                return Err(UsageError(format!("--enumerate is limited to {MAX_REPORT_NODES} nodes, got {n}")).into());
            }
            report_enumeration(n, &mut ChaCha8Rng::seed_from_u64(ctx.seed))?
        }
        (None, None) => return Err(UsageError("give --pair or --enumerate".into()).into()),
    };
    let resolved = json!({ "pair": pair.map(|k| k.to_string()), "enumerate": enumerate });
    let dir = start_run(ctx, "wl-report", "wl-report", resolved)?;
    let mut csv = Vec::new();
    write_report_csv(&rows, &mut csv)?;
    let csv = String::from_utf8(csv)?;
    write_text(&dir.join("report.csv"), &csv)?;
    emit(&csv);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn witness(ctx: &Ctx, max_nodes: usize) -> Result<()> {
    let outcome = find_witness(max_nodes).map_err(|e| UsageError(e.to_string()))?;
    let body = match &outcome {
        WitnessOutcome::Found { g, h, pairs_checked } => json!({
            "max_nodes": max_nodes,
            "found": true,
            "pairs_checked": pairs_checked,
            "g": GraphSpec::from(g),
            "h": GraphSpec::from(h),
            "set2wl_distinguishes": false,
            "lgan_hash_distinguishes": true,
        }),
        WitnessOutcome::Exhausted { pairs_checked } => {
            json!({ "max_nodes": max_nodes, "found": false, "pairs_checked": pairs_checked })
        }
    };
    let dir = start_run(ctx, "witness", "witness", json!({ "max_nodes": max_nodes }))?;
    write_json(&dir.join("witness.json"), &body)?;
    emitln!("{}", serde_json::to_string(&body)?);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn train(
    ctx: &Ctx,
    seed: Option<u64>,
    data_root: Option<PathBuf>,
    config: &Path,
    jobs: usize,
    save_full: bool,
) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(root) = data_root {
        cfg.data_root = root.display().to_string();
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let ds = load_dataset(&cfg.dataset, Path::new(&cfg.data_root), cfg.seed)
        .with_context(|| format!("loading dataset `{}`", cfg.dataset))?;
    let run_ctx =
        Ctx { seed: cfg.seed, output_root: ctx.output_root.clone(), data_root: PathBuf::from(&cfg.data_root) };
    let resolved = json!({ "config": cfg, "jobs": jobs, "save_full": save_full });
    let dir = start_run(&run_ctx, &cfg.dataset, "train", resolved)?;

    let (report, models) = cross_validate(&cfg, &ds, jobs)?;
    write_report(&report, &dir)?;
    for (fold, m) in models.iter().enumerate() {
        if let Some(t) = m {
            t.model.save(&dir.join(format!("fold{fold}.ckpt.json")), Some(&t.encoder))?;
        }
    }
    emitln!(
        "{} {}-fold accuracy: {} ({} folds completed)",
        report.dataset,
        cfg.folds,
        report.summary,
        report.folds.len()
    );
    if let Some(err) = &report.error {
        bail!("cross-validation incomplete, partial results in {}: {err}", dir.display());
    }
    if save_full {
        let (encoded, encoder) = encode_dataset(&ds)?;
        let all: Vec<usize> = (0..ds.len()).collect();
        let full = train_model(&cfg, &encoded, &encoder, &all, None, 0)?;
        full.model.save(&dir.join("model.json"), Some(&encoder))?;
        emitln!("full-data model: train accuracy {:.3}", full.train_accuracy);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn load_model(path: &Path, ds: Option<&Dataset>) -> Result<(LganModel, FeatureEncoder)> {
    let (model, encoder) = LganModel::load(path)?;
    let encoder = match (encoder, ds) {
        (Some(e), _) => e,
        (None, Some(ds)) => FeatureEncoder::for_dataset(ds),
        (None, None) => bail!("checkpoint {} has no feature encoder", path.display()),
    };
    Ok((model, encoder))
}

fn evaluate(ctx: &Ctx, checkpoint: &Path, name: &str) -> Result<()> {
    let ds = dataset(ctx, name)?;
    let (model, encoder) = load_model(checkpoint, Some(&ds))?;
    let encoded = ds.encoded(&encoder)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let acc = accuracy(&model, &encoded, &all)?;
    let resolved = json!({ "checkpoint": checkpoint, "dataset": name, "data_root": ctx.data_root });
    let dir = start_run(ctx, "evaluate", "evaluate", resolved)?;
    let body = json!({ "dataset": name, "graphs": ds.len(), "accuracy": acc });
    write_json(&dir.join("eval.json"), &body)?;
    emitln!("{name}: accuracy {:.1}% over {} graphs", 100.0 * acc, ds.len());
    eprintln!("wrote {}", dir.display());
    Ok(())
}

/// `pair:<kind>[:<0|1>]` or a dataset index.
fn pick_graph(ctx: &Ctx, spec: &str, name: &str) -> Result<(Graph, Option<Dataset>)> {
    if let Some(rest) = spec.strip_prefix("pair:") {
        let (kind, side) = match rest.split_once(':') {
            Some((k, s)) => (k, s.parse::<usize>().map_err(|_| UsageError(format!("bad pair side `{s}`")))?),
            None => (rest, 0),
        };
        let kind: PairKind = kind.parse().map_err(|e: lgan::graph::GraphError| UsageError(e.to_string()))?;
        let (g, h) = generate_pair(kind);
        return match side {
            0 => Ok((g, None)),
            1 => Ok((h, None)),
            _ => Err(UsageError(format!("pair side must be 0 or 1, got {side}")).into()),
        };
    }
    let idx: usize =
        spec.parse().map_err(|_| UsageError(format!("--graph must be an index or pair:<kind>, got `{spec}`")))?;
    let ds = dataset(ctx, name)?;
    let g = ds
        .graphs
        .get(idx)
        .cloned()
        .ok_or_else(|| UsageError(format!("graph {idx} out of range ({} graphs)", ds.len())))?;
    Ok((g, Some(ds)))
}

fn attribute(ctx: &Ctx, checkpoint: &Path, spec: &str, name: &str, steps: usize, target: Option<usize>) -> Result<()> {
    let (g, ds) = pick_graph(ctx, spec, name)?;
    let (model, encoder) = load_model(checkpoint, ds.as_ref())?;
    let x = encoder.encode(&g).context("encoding the graph with the checkpoint's encoder")?;
    let g = g.with_features(x)?;
    let attr = ig_edge_attribution(&model, &g, spec, target, steps)?;
    let resolved =
        json!({ "checkpoint": checkpoint, "graph": spec, "dataset": name, "steps": steps, "target": target });
    let dir = start_run(ctx, "attribute", "attribute", resolved)?;
    let sidecar = export_annotated(&g, &attr, &dir.join("attribution.dot"))?;
    write_json(&dir.join("result.json"), &json!({ "result": attr, "completeness_error": attr.completeness_error() }))?;
    emitln!(
        "graph {spec}: predicted {}, target {}, completeness error {:.3}%",
        attr.predicted_class,
        attr.target_class,
        100.0 * attr.completeness_error()
    );
    for &e in attr.ranking().iter().take(5) {
        let (u, v) = attr.edges[e];
        emitln!("  {u} -- {v}: {:+.5}", attr.scores[e]);
    }
    eprintln!("wrote {} and {}", dir.join("attribution.dot").display(), sidecar.display());
    Ok(())
}

fn bench(ctx: &Ctx, name: &str, hidden: usize, reps: usize, no_timing: bool) -> Result<()> {
    let graphs: Vec<(String, Graph)> = if name == "er_sweep" {
        er_sweep(&DEFAULT_SWEEP, 4.0, ctx.seed)
    } else if let Some(kind) = name.strip_prefix("pair:") {
        let kind: PairKind = kind.parse().map_err(|e: lgan::graph::GraphError| UsageError(e.to_string()))?;
        let (g, h) = generate_pair(kind);
        vec![(format!("{kind}:0"), g), (format!("{kind}:1"), h)]
    } else {
        dataset(ctx, name)?.graphs.into_iter().enumerate().map(|(i, g)| (i.to_string(), g)).collect()
    };
    let timing = (!no_timing).then_some((hidden, reps));
    let rows = bench_graphs(&graphs, timing, ctx.seed)?;
    let resolved =
        json!({ "dataset": name, "hidden": hidden, "reps": reps, "timing": !no_timing, "data_root": ctx.data_root });
    let dir = start_run(ctx, "bench", "bench", resolved)?;
    let csv = rows_csv(&rows);
    write_text(&dir.join("bench.csv"), &csv)?;
    let fit = fit_rows(&rows);
    write_json(
        &dir.join("fit.json"),
        &json!({ "model": "layer_seconds ~ intercept + slope * (target_msgs + neighbor_msgs)", "fit": fit }),
    )?;
    emit(&csv);
    if let Some(f) = fit {
        emitln!("fit: slope {:.3e} s/message, intercept {:.3e} s, R^2 {:.4}", f.slope, f.intercept, f.r2);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}
