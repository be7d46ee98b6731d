//! Command-line front end: `build`, `sample`, `census` and `exact`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ags::{self, AgsConfig};
use crate::buildup::{build_with_progress, BuildOptions, TableSet};
use crate::error::{Error, Result};
use crate::estimate::{self, EstimateReport};
use crate::graph::{self, ColoredGraph, Graph};
use crate::graphlet::census;
use crate::oracle;
use crate::pipeline::{self, Budget, SampleConfig};
use crate::sampler::BufferConfig;
use crate::treelet::{enumerate_shapes, ShapeCatalog, TreeletIndexTables};

pub const MANIFEST: &str = "manifest.json";
pub const ID_MAP: &str = "ids.txt";

#[derive(Debug, Parser)]
#[command(name = "motifcount", version, about = "Graphlet counting with color coding and adaptive sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Color the graph and build the treelet count tables.
    Build(BuildArgs),
    /// Estimate graphlet counts by sampling from built tables.
    Sample(SampleArgs),
    /// Print treelet and graphlet class counts for a motif size.
    Census(CensusArgs),
    /// Count graphlets exactly by enumeration (small graphs only).
    Exact(ExactArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(short = 'k')]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Biased coloring: each nonzero color with this probability.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub tables: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub no_skip_round: bool,
    #[arg(long)]
    pub no_zero_root: bool,
    /// Fixed-width counts even where variable-length ones are available.
    #[arg(long)]
    pub no_vlc: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Ags,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub tables: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub samples: u64,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Covering threshold; overrides --eps/--delta.
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Degree from which neighbor draws are buffered.
    #[arg(long)]
    pub delta0: Option<usize>,
    /// Neighbor buffer size; 0 disables buffering.
    #[arg(long)]
    pub buffer: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth CSV; relative errors go next to --out.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(short = 'k')]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(short = 'k')]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Build record stored next to the tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub k: usize,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub graph_sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub vlc: bool,
    pub skip_round: bool,
    pub zero_root: bool,
    pub total: String,
    pub star_total: String,
    pub shape_totals: Vec<String>,
    pub round_seconds: Vec<f64>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::format(&path, e.to_string()))
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn progress(value: serde_json::Value) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{value}");
}

/// Loads a text edge list (with its original ids) or a binary graph cache.
pub fn load_graph(path: &Path) -> Result<(Graph, Option<Vec<u64>>)> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    if n == 4 && &magic == b"GFG1" {
        return Ok((Graph::read_cache(path)?, None));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let loaded = graph::load_edge_list(BufReader::new(f))?;
    Ok((loaded.graph, Some(loaded.original_ids)))
}

pub fn cmd_build(a: &BuildArgs) -> Result<Manifest> {
    graph::check_k(a.k)?;
    if let Some(l) = a.lambda {
        graph::check_lambda(a.k, l)?;
    }
    let (g, ids) = load_graph(&a.graph)?;
    let g = Arc::new(g);
    let colored = match a.lambda {
        Some(l) => ColoredGraph::biased(Arc::clone(&g), a.k, l, a.seed)?,
        None => ColoredGraph::uniform(Arc::clone(&g), a.k, a.seed)?,
    };
    let mut opts = BuildOptions::for_k(a.k);
    opts.threads = a.threads;
    if a.no_skip_round {
        opts.skip_round = false;
        opts.zero_root = true;
    }
    if a.no_zero_root {
        opts.zero_root = false;
    }
    if a.no_vlc {
        opts.vlc = false;
    }
    let mut round_seconds = Vec::new();
    let tables = build_with_progress(&colored, &opts, &a.tables, |h, d| {
        round_seconds.push(d.as_secs_f64());
        progress(json!({"event": "round", "round": h, "seconds": d.as_secs_f64()}));
    })?;
    if let Some(ids) = ids {
        graph::write_id_map(&a.tables.join(ID_MAP), &ids)?;
    }
    let manifest = Manifest {
        k: a.k,
        seed: a.seed,
        lambda: a.lambda,
        graph_sha256: g.content_hash(),
        nodes: g.node_count(),
        edges: g.edge_count(),
        vlc: opts.vlc,
        skip_round: tables.round_skipped(),
        zero_root: tables.zero_rooted(),
        total: tables.total().to_string(),
        star_total: tables.star_total().to_string(),
        shape_totals: tables.shape_totals().iter().map(|s| s.total.to_string()).collect(),
        round_seconds,
    };
    manifest.write(&a.tables)?;
    progress(json!({"event": "built", "total": manifest.total, "star_total": manifest.star_total}));
    Ok(manifest)
}

/// The covering threshold implied by the flags: an explicit value, the
/// formula from ε and δ over every connected class, or 1000.
pub fn resolve_threshold(k: usize, threshold: Option<u64>, eps: Option<f64>, delta: Option<f64>) -> Result<u64> {
    match (threshold, eps, delta) {
        (Some(0), _, _) => Err(Error::invalid("--threshold must be positive")),
        (Some(c), _, _) => Ok(c),
        (None, Some(e), Some(d)) => ags::covering_threshold(e, d, census::class_count(k)?),
        (None, None, None) => Ok(1000),
        _ => Err(Error::invalid("--eps and --delta go together")),
    }
}

pub fn cmd_sample(a: &SampleArgs) -> Result<EstimateReport> {
    let budget = Budget {
        samples: (a.samples > 0).then_some(a.samples),
        time: match a.time {
            Some(t) if t > 0.0 && t.is_finite() => Some(Duration::from_secs_f64(t)),
            Some(_) => return Err(Error::invalid("--time must be positive")),
            None => None,
        },
    };
    budget.validate()?;
    let manifest = Manifest::read(&a.tables)?;
    let (g, _) = load_graph(&a.graph)?;
    if g.content_hash() != manifest.graph_sha256 {
        return Err(Error::Mismatch("graph differs from the one the tables were built on".into()));
    }
    let tables = TableSet::open(&a.tables)?;
    if tables.k() != manifest.k {
        return Err(Error::Mismatch("manifest and tables disagree on k".into()));
    }
    let mut buffer = BufferConfig::default();
    if let Some(d) = a.delta0 {
        buffer.delta0 = d;
    }
    if let Some(b) = a.buffer {
        buffer = if b == 0 { BufferConfig::disabled() } else { BufferConfig { size: b, ..buffer } };
    }
    let start = Instant::now();
    let report = match a.mode {
        ModeArg::Uniform => {
            let mut cfg = SampleConfig::new(budget, a.seed);
            cfg.threads = a.threads;
            cfg.buffer = buffer;
            pipeline::run_uniform(&tables, &g, &cfg)?
        }
        ModeArg::Ags => {
            let threshold = resolve_threshold(tables.k(), a.threshold, a.eps, a.delta)?;
            progress(json!({"event": "threshold", "value": threshold}));
            let mut cfg = AgsConfig::new(threshold, budget, a.seed);
            cfg.threads = a.threads;
            cfg.buffer = buffer;
            let out = ags::ags_run(&tables, &g, &cfg, |e| {
                progress(json!({"event": "epoch", "epoch": e.epoch, "shape": e.shape, "samples": e.samples, "covered": e.covered}));
            })?;
            out.report
        }
    };
    progress(json!({"event": "sampled", "samples": report.total_samples, "classes": report.classes.len(), "seconds": start.elapsed().as_secs_f64()}));
    report.write_csv(&a.out)?;
    if let Some(t) = &a.truth {
        let truth = oracle::read_truth_csv(t)?;
        let errs = estimate::relative_error(&report, &truth);
        errs.write_csv(&error_path(&a.out))?;
        progress(json!({"event": "errors", "within_quarter": errs.within_quarter(), "classes": errs.rows.len()}));
    }
    Ok(report)
}

/// `out.csv` → `out.err.csv`.
pub fn error_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.err.csv"))
}

pub fn census_lines(k: usize) -> Result<Vec<String>> {
    graph::check_k(k)?;
    let rooted = enumerate_shapes(k).iter().filter(|s| s.size() == k).count();
    let mut lines = vec![
        format!("k: {k}"),
        format!("rooted_shapes: {rooted}"),
        format!("unrooted_shapes: {}", ShapeCatalog::new(k).len()),
    ];
    if k <= 8 {
        lines.push(format!("colored_treelets: {}", TreeletIndexTables::new(k)?.count()));
    }
    lines.push(format!("graphlet_classes: {}", census::class_count(k)?));
    Ok(lines)
}

pub fn cmd_exact(a: &ExactArgs) -> Result<usize> {
    let (g, _) = load_graph(&a.graph)?;
    let counts = oracle::exact_graphlet_counts(&g, a.k)?;
    oracle::write_truth_csv(&a.out, &counts)?;
    Ok(counts.len())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Build(a) => cmd_build(a).map(|_| ()),
        Command::Sample(a) => cmd_sample(a).map(|_| ()),
        Command::Census(a) => {
            let mut out = std::io::stdout().lock();
            for l in census_lines(a.k)? {
                let _ = writeln!(out, "{l}");
            }
            Ok(())
        }
        Command::Exact(a) => {
            let n = cmd_exact(a)?;
            progress(json!({"event": "exact", "classes": n}));
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

