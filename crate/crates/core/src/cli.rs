//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 infeasible
//! configuration, 3 numerical failure. Every failure prints one diagnostic
//! line to stderr. Output files are written to a temporary name and renamed
//! into place.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bench::{self, BenchError, BenchSpec, Suite, LFR_DEFAULT_DIM};
use crate::density::{DensityError, DEFAULT_DC_PERCENTILE};
use crate::generators::{generate_gn, generate_lfr, GeneratorError, GnSpec, LabeledGraph, LfrSpec};
use crate::graph::{load_edge_list, load_gml, Graph};
use crate::isomap::{classical_mds, residual_variance, IsomapError};
use crate::metrics::{accuracy, nmi, MetricsError};
use crate::pipeline::{detect, embed, IsoFdpConfig, PipelineError, StageTimings, DEFAULT_DIM, DEFAULT_LAMBDA};
use crate::quality::{default_k_max, PartitionError};
use crate::similarity::{Measure, SimilarityError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 1,
            CliError::Infeasible(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

impl From<IsomapError> for CliError {
    fn from(e: IsomapError) -> Self {
        match e {
            IsomapError::EigenResidual { .. } | IsomapError::Disconnected { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::Percentile(_) | DensityError::TooFewPoints(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::KMax { .. } => CliError::Infeasible(e.to_string()),
            PartitionError::Density(d) => d.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::TooSmall { .. } => CliError::Infeasible(e.to_string()),
            PipelineError::Similarity(SimilarityError::NegativeSimilarity { .. }) => CliError::Numerical(e.to_string()),
            PipelineError::Similarity(_) => CliError::Input(e.to_string()),
            PipelineError::Isomap(e) => e.into(),
            PipelineError::Density(e) => e.into(),
            PipelineError::Partition(e) => e.into(),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        CliError::Infeasible(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Generator(e) => e.into(),
            BenchError::Pipeline(e) => e.into(),
            BenchError::Metrics(e) => e.into(),
            BenchError::Baseline(e) => CliError::Infeasible(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isofdp", version, about = "Community detection by density peaks on an Isomap embedding")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Edges,
    Gml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Gn,
    Lfr,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Input graph file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted (`.gml` or edge list).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Node similarity measure.
    #[arg(long, global = true, default_value = "structure")]
    pub measure: Measure,
    /// Isomap neighborhood size.
    #[arg(long, global = true, default_value_t = DEFAULT_LAMBDA)]
    pub knn: usize,
    /// Embedding dimension [default: 4, or 8 for LFR benchmarks].
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Cutoff distance as a percentile of pairwise embedded distances.
    #[arg(long = "dc-percentile", global = true, default_value_t = DEFAULT_DC_PERCENTILE)]
    pub dc_percentile: f64,
    /// Largest community count tried [default: min(ceil(2 sqrt n), n - 1)].
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Master seed for generators and baselines.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving output files.
    #[arg(long = "out-dir", global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect communities and write report.json, sweep.csv, decision_graph.csv, embedding.csv.
    Detect {
        /// Ground truth (`token<TAB>community` per line) to score against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Record per-stage wall-clock times in the report (makes it run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Score IsoFdp and the baselines on generated benchmark graphs.
    Benchmark {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// GN z_out values: `a..b`, `a..b:step` or a comma list.
        #[arg(long, default_value = "1..8")]
        zout: String,
        /// LFR mixing values: `a..b`, `a..b:step` or a comma list.
        #[arg(long, default_value = "0.1..0.8")]
        mu: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Score IsoFdp at each of these cutoff percentiles.
        #[arg(long = "dc-sweep")]
        dc_sweep: Option<String>,
        /// Skip the k-means and DBSCAN baselines.
        #[arg(long = "no-baselines")]
        no_baselines: bool,
    },
    /// Write a benchmark graph as an edge list plus a truth sidecar.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Print NMI and accuracy of a predicted labeling as JSON.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Write the Isomap embedding; optionally the residual variance per dimension.
    Embed {
        /// Dimensions for the residual-variance table, e.g. `1..10`.
        #[arg(long = "dim-sweep")]
        dim_sweep: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    Gn {
        #[arg(long)]
        zout: u32,
        /// File name stem [default: gn].
        #[arg(long)]
        prefix: Option<String>,
    },
    Lfr {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long = "avg-degree", default_value_t = 20.0)]
        avg_degree: f64,
        #[arg(long = "max-degree", default_value_t = 50)]
        max_degree: usize,
        #[arg(long, default_value_t = 2.0)]
        t1: f64,
        #[arg(long, default_value_t = 1.0)]
        t2: f64,
        #[arg(long = "min-c", default_value_t = 20)]
        min_c: usize,
        #[arg(long = "max-c", default_value_t = 60)]
        max_c: usize,
        /// File name stem [default: lfr].
        #[arg(long)]
        prefix: Option<String>,
    },
}

/// Parses `a..b` (inclusive, step 1 for integer ends and 0.1 otherwise),
/// `a..b:step`, or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("cannot parse value list `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let Some((lo, rest)) = s.split_once("..") else {
        return s.split(',').map(num).collect();
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (hi, num(step)?),
        None if lo.contains('.') || rest.contains('.') => (rest, 0.1),
        None => (rest, 1.0),
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !(step > 0.0) || hi < lo {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_error(path))
}

pub fn read_graph(path: &Path, format: Option<Format>) -> Result<Graph, CliError> {
    let format = format.unwrap_or_else(|| {
        let gml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gml"));
        if gml { Format::Gml } else { Format::Edges }
    });
    let text = read_text(path)?;
    let parsed = match format {
        Format::Edges => load_edge_list(&text),
        Format::Gml => load_gml(&text),
    };
    parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads `token<TAB>community` lines (any whitespace separates the fields).
pub fn read_labels(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(CliError::Input(format!(
                "{} line {}: expected `token community`, found {} fields",
                path.display(),
                i + 1,
                fields.len()
            )));
        }
        out.push((fields[0].to_owned(), fields[1].to_owned()));
    }
    Ok(out)
}

/// Community id per graph node, in node order.
fn labels_for(g: &Graph, path: &Path) -> Result<Vec<usize>, CliError> {
    let pairs = read_labels(path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut by_token: HashMap<String, usize> = HashMap::new();
    for (token, community) in pairs {
        let next = ids.len();
        let id = *ids.entry(community).or_insert(next);
        by_token.insert(token, id);
    }
    g.tokens()
        .iter()
        .map(|t| {
            by_token
                .get(t)
                .copied()
                .ok_or_else(|| CliError::Input(format!("{}: no community for node `{t}`", path.display())))
        })
        .collect()
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl GlobalArgs {
    fn input_graph(&self) -> Result<(Graph, &Path), CliError> {
        let path = self.input.as_deref().ok_or_else(|| CliError::Input("--input is required".into()))?;
        Ok((read_graph(path, self.format)?, path))
    }

    fn config(&self, dim: usize) -> IsoFdpConfig {
        IsoFdpConfig {
            measure: self.measure,
            lambda: self.knn,
            dim: self.dim.unwrap_or(dim),
            dc_percentile: self.dc_percentile,
            k_max: self.kmax,
        }
    }

    fn config_json(&self, cfg: &IsoFdpConfig, n: usize) -> Value {
        json!({
            "input": self.input.as_ref().map(|p| p.display().to_string()),
            "measure": cfg.measure.name(),
            "knn": cfg.lambda.min(n.saturating_sub(1)),
            "dim": cfg.dim.min(n.saturating_sub(1)),
            "dc_percentile": cfg.dc_percentile,
            "kmax": cfg.k_max.unwrap_or_else(|| default_k_max(n)),
            "seed": self.seed,
        })
    }
}

fn cmd_detect(global: &GlobalArgs, truth: Option<&Path>, timings: bool) -> Result<(), CliError> {
    let (g, _) = global.input_graph()?;
    let truth = truth.map(|p| labels_for(&g, p)).transpose()?;
    let cfg = global.config(DEFAULT_DIM);
    let start = Instant::now();
    let det = detect(&g, &cfg)?;
    let total = start.elapsed();

    let labels = det.labels();
    let communities: Map<String, Value> =
        g.tokens().iter().zip(labels).map(|(t, &c)| (t.clone(), json!(c))).collect();
    let sweep: Vec<Value> = det.sweep.records.iter().map(|r| json!([r.k, r.density])).collect();
    let mut metrics = Map::new();
    if let Some(truth) = &truth {
        metrics.insert("nmi".into(), json!(nmi(truth, labels)?));
        metrics.insert("acc".into(), json!(accuracy(truth, labels)?));
    }
    let mut timings_ms = Map::new();
    if timings {
        let t = &det.timings;
        timings_ms.insert("similarity".into(), json!(millis(t.similarity)));
        timings_ms.insert("isomap".into(), json!(millis(t.isomap)));
        timings_ms.insert("density".into(), json!(millis(t.density)));
        timings_ms.insert("sweep".into(), json!(millis(t.sweep)));
        timings_ms.insert("total".into(), json!(millis(total)));
    }
    let report = json!({
        "config": global.config_json(&cfg, g.node_count()),
        "k_star": det.k_star(),
        "communities": communities,
        "sweep": sweep,
        "metrics": metrics,
        "timings_ms": timings_ms,
    });

    let dir = &global.out_dir;
    ensure_dir(dir)?;
    let mut decision = String::from("node,rho,delta,gamma\n");
    for (i, token) in g.tokens().iter().enumerate() {
        let p = &det.profile;
        decision.push_str(&format!("{token},{},{},{}\n", p.rho[i], p.delta[i], p.gamma[i]));
    }
    let report_text = serde_json::to_string_pretty(&report).expect("report is valid JSON") + "\n";
    write_atomic(&dir.join("report.json"), &report_text)?;
    write_atomic(&dir.join("sweep.csv"), &det.sweep.to_csv())?;
    write_atomic(&dir.join("decision_graph.csv"), &decision)?;
    write_atomic(&dir.join("embedding.csv"), &det.embedding.to_csv(g.tokens()))?;
    println!("k_star={} nodes={} edges={} out={}", det.k_star(), g.node_count(), g.edge_count(), dir.display());
    Ok(())
}

fn cmd_benchmark(
    global: &GlobalArgs,
    suite: SuiteArg,
    zout: &str,
    mu: &str,
    trials: usize,
    dc_sweep: Option<&str>,
    no_baselines: bool,
) -> Result<(), CliError> {
    let (suite, params, dim) = match suite {
        SuiteArg::Gn => (Suite::Gn, parse_values(zout)?, DEFAULT_DIM),
        SuiteArg::Lfr => (Suite::Lfr, parse_values(mu)?, LFR_DEFAULT_DIM),
    };
    let spec = BenchSpec {
        suite,
        params,
        trials,
        dc_percentiles: dc_sweep.map(parse_values).transpose()?.unwrap_or_default(),
        baselines: !no_baselines,
        config: global.config(dim),
        master_seed: global.seed,
    };
    let rows = bench::run(&spec)?;
    ensure_dir(&global.out_dir)?;
    write_atomic(&global.out_dir.join("benchmark.csv"), &bench::rows_to_csv(suite, &rows))?;
    let summary = bench::summary_csv(suite, &rows);
    write_atomic(&global.out_dir.join("benchmark_summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn write_generated(global: &GlobalArgs, stem: &str, lg: &LabeledGraph) -> Result<(), CliError> {
    ensure_dir(&global.out_dir)?;
    let edges = global.out_dir.join(format!("{stem}.edges"));
    let truth = global.out_dir.join(format!("{stem}.truth"));
    write_atomic(&edges, &lg.graph.to_edge_list())?;
    write_atomic(&truth, &lg.truth_file())?;
    println!(
        "nodes={} edges={} communities={} out={}",
        lg.graph.node_count(),
        lg.graph.edge_count(),
        lg.community_count(),
        edges.display()
    );
    Ok(())
}

fn cmd_generate(global: &GlobalArgs, kind: &GenerateKind) -> Result<(), CliError> {
    match kind {
        GenerateKind::Gn { zout, prefix } => {
            let lg = generate_gn(GnSpec { z_out: *zout, seed: global.seed })?;
            write_generated(global, prefix.as_deref().unwrap_or("gn"), &lg)
        }
        GenerateKind::Lfr { mu, n, avg_degree, max_degree, t1, t2, min_c, max_c, prefix } => {
            let spec = LfrSpec {
                n: *n,
                mu: *mu,
                avg_degree: *avg_degree,
                max_degree: *max_degree,
                t1: *t1,
                t2: *t2,
                min_c: *min_c,
                max_c: *max_c,
                seed: global.seed,
            };
            let lg = generate_lfr(spec)?;
            write_generated(global, prefix.as_deref().unwrap_or("lfr"), &lg)
        }
    }
}

fn cmd_eval(truth: &Path, pred: &Path) -> Result<(), CliError> {
    let truth_pairs = read_labels(truth)?;
    let pred_map: HashMap<String, String> = read_labels(pred)?.into_iter().collect();
    let mut t = Vec::with_capacity(truth_pairs.len());
    let mut p = Vec::with_capacity(truth_pairs.len());
    let mut ids: HashMap<(bool, String), usize> = HashMap::new();
    let mut intern = |side: bool, label: &str| {
        let next = ids.len();
        *ids.entry((side, label.to_owned())).or_insert(next)
    };
    for (token, community) in &truth_pairs {
        let predicted = pred_map
            .get(token)
            .ok_or_else(|| CliError::Input(format!("{}: no community for node `{token}`", pred.display())))?;
        t.push(intern(false, community));
        p.push(intern(true, predicted));
    }
    if pred_map.len() != truth_pairs.len() {
        return Err(CliError::Input(format!(
            "{} labels {} nodes but {} labels {}",
            pred.display(),
            pred_map.len(),
            truth.display(),
            truth_pairs.len()
        )));
    }
    println!("{}", json!({"nmi": nmi(&t, &p)?, "acc": accuracy(&t, &p)?}));
    Ok(())
}

fn cmd_embed(global: &GlobalArgs, dim_sweep: Option<&str>) -> Result<(), CliError> {
    let (g, _) = global.input_graph()?;
    let cfg = global.config(DEFAULT_DIM);
    let embedded = embed(&g, &cfg, &mut StageTimings::default())?;
    ensure_dir(&global.out_dir)?;
    write_atomic(&global.out_dir.join("embedding.csv"), &embedded.embedding.to_csv(g.tokens()))?;
    if let Some(sweep) = dim_sweep {
        let mut table = String::from("dim,residual_variance\n");
        for p in parse_values(sweep)? {
            if p < 1.0 || p.fract() != 0.0 {
                return Err(CliError::Input(format!("dimension {p} is not a positive integer")));
            }
            let e = classical_mds(&embedded.geodesics, p as usize)?;
            table.push_str(&format!("{},{}\n", p as usize, residual_variance(&embedded.geodesics, &e)));
        }
        write_atomic(&global.out_dir.join("residual_variance.csv"), &table)?;
    }
    println!("nodes={} dim={} out={}", g.node_count(), embedded.embedding.dim(), global.out_dir.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let global = &cli.global;
    match &cli.command {
        Command::Detect { truth, timings } => cmd_detect(global, truth.as_deref(), *timings),
        Command::Benchmark { suite, zout, mu, trials, dc_sweep, no_baselines } => {
            cmd_benchmark(global, *suite, zout, mu, *trials, dc_sweep.as_deref(), *no_baselines)
        }
        Command::Generate { kind } => cmd_generate(global, kind),
        Command::Eval { truth, pred } => cmd_eval(truth, pred),
        Command::Embed { dim_sweep } => cmd_embed(global, dim_sweep.as_deref()),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
