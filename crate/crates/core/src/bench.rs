//! Benchmark trials: seeded GN or LFR instances scored for IsoFdp and the
//! embedding-based k-means and DBSCAN baselines.
//!
//! Instance seeds come from [`instance_seed`], so any single `(param, trial)`
//! cell can be regenerated without running the rest of the table.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{dbscan_grid, kmeans, BaselineError, KmeansSpec};
use crate::generators::{generate_gn, generate_lfr, GeneratorError, GnSpec, LabeledGraph, LfrSpec};
use crate::metrics::{accuracy, nmi, MetricsError};
use crate::pipeline::{detect_on_embedding, embed, IsoFdpConfig, PipelineError, StageTimings};
use crate::seed::derive_seed;

/// Embedding dimension used for LFR suites unless overridden.
pub const LFR_DEFAULT_DIM: usize = 8;

const GN_STREAM: u64 = 0x676e_0000_0000;
const LFR_STREAM: u64 = 0x6c66_7200_0000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gn,
    Lfr,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Gn => "gn",
            Suite::Lfr => "lfr",
        }
    }

    /// Label of a parameter value as it appears in output tables.
    pub fn format_param(self, param: f64) -> String {
        match self {
            Suite::Gn => format!("{}", param.round() as u32),
            Suite::Lfr => format!("{param:.2}"),
        }
    }
}

/// Seed of trial `trial` at parameter `param` (`z_out` or `mu`).
pub fn instance_seed(master: u64, suite: Suite, param: f64, trial: usize) -> u64 {
    let stream = match suite {
        Suite::Gn => GN_STREAM | param.round() as u64,
        Suite::Lfr => LFR_STREAM | (param * 1000.0).round() as u64,
    };
    derive_seed(master, stream, trial as u64)
}

pub fn generate_instance(suite: Suite, param: f64, seed: u64) -> Result<LabeledGraph, GeneratorError> {
    match suite {
        Suite::Gn => {
            if !(0.0..=16.0).contains(&param) || param.fract() != 0.0 {
                return Err(GeneratorError::InvalidSpec(format!("z_out must be an integer in 0..=16, got {param}")));
            }
            generate_gn(GnSpec { z_out: param as u32, seed })
        }
        Suite::Lfr => generate_lfr(LfrSpec::benchmark(param, seed)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    IsoFdp,
    KmeansIso,
    DbscanIso,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::IsoFdp => "isofdp",
            Method::KmeansIso => "kmeans_iso",
            Method::DbscanIso => "dbscan_iso",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub param: f64,
    pub trial: usize,
    /// Set for IsoFdp rows only.
    pub dc_percentile: Option<f64>,
    pub method: Method,
    pub nmi: f64,
    pub acc: f64,
    pub k_detected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub suite: Suite,
    pub params: Vec<f64>,
    pub trials: usize,
    /// IsoFdp is scored at each of these; empty means the config's own value.
    pub dc_percentiles: Vec<f64>,
    pub baselines: bool,
    pub config: IsoFdpConfig,
    pub master_seed: u64,
}

/// Scores one instance. The embedding is shared by every method and every
/// `d_c` percentile.
pub fn run_trial(spec: &BenchSpec, param: f64, trial: usize) -> Result<Vec<BenchRow>, BenchError> {
    let seed = instance_seed(spec.master_seed, spec.suite, param, trial);
    let lg = generate_instance(spec.suite, param, seed)?;
    let embedded = embed(&lg.graph, &spec.config, &mut StageTimings::default())?;
    let dcs = if spec.dc_percentiles.is_empty() { vec![spec.config.dc_percentile] } else { spec.dc_percentiles.clone() };
    let mut rows = Vec::new();
    for dc in dcs {
        let cfg = IsoFdpConfig { dc_percentile: dc, ..spec.config };
        let det = detect_on_embedding(&lg.graph, embedded.embedding.clone(), &cfg, StageTimings::default())?;
        rows.push(BenchRow {
            param,
            trial,
            dc_percentile: Some(dc),
            method: Method::IsoFdp,
            nmi: nmi(&lg.truth, det.labels())?,
            acc: accuracy(&lg.truth, det.labels())?,
            k_detected: det.k_star(),
        });
    }
    if spec.baselines {
        let km = kmeans(&embedded.embedding, &KmeansSpec::new(lg.community_count(), seed))?;
        rows.push(BenchRow {
            param,
            trial,
            dc_percentile: None,
            method: Method::KmeansIso,
            nmi: nmi(&lg.truth, km.partition.labels())?,
            acc: accuracy(&lg.truth, km.partition.labels())?,
            k_detected: km.partition.k(),
        });
        let db = dbscan_grid(&embedded.embedding, &lg.truth)?;
        rows.push(BenchRow {
            param,
            trial,
            dc_percentile: None,
            method: Method::DbscanIso,
            nmi: db.best_nmi,
            acc: db.best_acc,
            k_detected: db.nmi_k,
        });
    }
    Ok(rows)
}

/// Runs every `(param, trial)` cell in parallel; rows come back in
/// `(param, trial)` order regardless of scheduling.
pub fn run(spec: &BenchSpec) -> Result<Vec<BenchRow>, BenchError> {
    let cells: Vec<(f64, usize)> =
        spec.params.iter().flat_map(|&p| (0..spec.trials).map(move |t| (p, t))).collect();
    let per_cell: Vec<Vec<BenchRow>> =
        cells.par_iter().map(|&(p, t)| run_trial(spec, p, t)).collect::<Result<_, _>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn format_dc(dc: Option<f64>) -> String {
    dc.map(|d| format!("{d}")).unwrap_or_default()
}

pub fn rows_to_csv(suite: Suite, rows: &[BenchRow]) -> String {
    let mut out = String::from("param,trial,dc_percentile,method,nmi,acc,k_detected\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            suite.format_param(r.param),
            r.trial,
            format_dc(r.dc_percentile),
            r.method,
            r.nmi,
            r.acc,
            r.k_detected
        ));
    }
    out
}

/// Per `(param, d_c, method)` means over trials, in first-appearance order.
pub fn summary_csv(suite: Suite, rows: &[BenchRow]) -> String {
    let mut groups: Vec<((f64, Option<f64>, Method), Vec<&BenchRow>)> = Vec::new();
    for r in rows {
        let key = (r.param, r.dc_percentile, r.method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut out = String::from("param,dc_percentile,method,trials,mean_nmi,mean_acc,mean_k\n");
    for ((param, dc, method), members) in groups {
        let m = members.len() as f64;
        let mean = |f: fn(&BenchRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / m;
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.3}\n",
            suite.format_param(param),
            format_dc(dc),
            method,
            members.len(),
            mean(|r| r.nmi),
            mean(|r| r.acc),
            mean(|r| r.k_detected as f64)
        ));
    }
    out
}
