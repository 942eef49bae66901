//! Benchmark driver behind the `ssmedian` binary.

pub mod generate;
pub mod io;
pub mod lloyd;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::{BruteForce, KMedianSolver, LocalSearch};
use crate::error::{Error, Result};
use crate::metric::{Instance, MetricMode};
use crate::pipeline::{auto_kmedian, PipelineReport, ReportRecord};
use crate::rng;
use crate::sampler::{SamplerParams, DEFAULT_ALPHA, DEFAULT_BETA};

pub use generate::{generate, GeneratorSpec};
pub use io::{parse_input, InputFormat};
pub use lloyd::{lloyd_refine, snap_to_points, LloydOutcome};

/// Streams for the Lloyd baselines.
const RANDOM_INIT_STREAM: u64 = 0x7261_6e64;
const FARTHEST_INIT_STREAM: u64 = 0x0066_6172;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Kmedian,
    KmeansInit,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Kmedian => "kmedian",
            RunMode::KmeansInit => "kmeans-init",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmedian" => Ok(RunMode::Kmedian),
            "kmeans-init" => Ok(RunMode::KmeansInit),
            other => Err(Error::InvalidParams(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    LocalSearch,
    BruteForce,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::LocalSearch => "local-search",
            SolverKind::BruteForce => "brute-force",
        }
    }

    fn build(self) -> Box<dyn KMedianSolver> {
        match self {
            SolverKind::LocalSearch => Box::new(LocalSearch::default()),
            SolverKind::BruteForce => Box::new(BruteForce::default()),
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-search" => Ok(SolverKind::LocalSearch),
            "brute-force" => Ok(SolverKind::BruteForce),
            other => Err(Error::InvalidParams(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File { path: PathBuf, format: InputFormat },
    Generate(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub k: usize,
    pub mode: RunMode,
    /// Metric for points files and coordinate generators.
    pub metric: MetricMode,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub solver: SolverKind,
    /// Also compute the exact optimum with the brute-force oracle.
    pub oracle: bool,
    /// Write measured stage timings into the report; zero otherwise.
    pub timings: bool,
    pub lloyd_iters: usize,
}

impl RunConfig {
    pub fn new(input: InputSource, k: usize, seed: u64) -> Self {
        RunConfig {
            input,
            k,
            mode: RunMode::Kmedian,
            metric: MetricMode::Euclidean,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            seed,
            solver: SolverKind::LocalSearch,
            oracle: false,
            timings: true,
            lloyd_iters: 100,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RunConfig { seed, ..self.clone() }
    }

    pub fn load(&self) -> Result<Instance> {
        match &self.input {
            InputSource::File { path, format } => parse_input(path, *format, self.metric),
            InputSource::Generate(spec) => generate(spec, self.seed, self.metric),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydSummary {
    pub iters: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
}

impl From<&LloydOutcome> for LloydSummary {
    fn from(out: &LloydOutcome) -> Self {
        LloydSummary { iters: out.iters, initial_cost: out.initial_cost(), final_cost: out.cost }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansSummary {
    pub lloyd: LloydSummary,
    pub random_init: LloydSummary,
    pub farthest_init: LloydSummary,
}

/// One run: the pipeline report plus optional oracle and k-means numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    #[serde(flatten)]
    pub report: ReportRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans: Option<KmeansSummary>,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub record: BenchRecord,
    pub pipeline: PipelineReport,
    /// Wall time of the pipeline (not of loading or the oracle), in ms.
    pub time_ms: f64,
}

impl BenchResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.record)?)
    }

    /// The objective the oracle compares against: final k-means cost in
    /// kmeans-init mode, final k-median cost otherwise.
    pub fn final_cost(&self) -> f64 {
        match &self.record.kmeans {
            Some(km) => km.lloyd.final_cost,
            None => self.record.report.final_cost,
        }
    }

    /// Writes every sampler round of the run as JSON lines.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.pipeline.traces {
            t.trace.write_jsonl(&mut out, t.class, Some(&t.ids))?;
        }
        Ok(())
    }
}

/// Loads the instance and runs the configured pipeline once.
pub fn run_bench(config: &RunConfig) -> Result<BenchResult> {
    if config.k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let inst = config.load()?;
    let work = match config.mode {
        RunMode::Kmedian => inst.clone(),
        RunMode::KmeansInit => inst.with_mode(MetricMode::SquaredEuclidean)?,
    };
    let params = SamplerParams::new(config.k, config.seed).with_alpha(config.alpha).with_beta(config.beta);
    let solver = config.solver.build();

    let start = Instant::now();
    let pipeline = auto_kmedian(&work, &params, solver.as_ref())?;
    let time_ms = start.elapsed().as_secs_f64() * 1e3;

    let kmeans = match config.mode {
        RunMode::Kmedian => None,
        RunMode::KmeansInit => {
            let ours = lloyd_refine(&inst, &pipeline.final_config, config.lloyd_iters)?;
            let random = lloyd::random_init(&inst, config.k, &mut rng::stream(config.seed, RANDOM_INIT_STREAM))?;
            let random = lloyd_refine(&inst, &random, config.lloyd_iters)?;
            let far = lloyd::farthest_point_init(&inst, config.k, &mut rng::stream(config.seed, FARTHEST_INIT_STREAM))?;
            let far = lloyd_refine(&inst, &far, config.lloyd_iters)?;
            Some(KmeansSummary {
                lloyd: (&ours).into(),
                random_init: (&random).into(),
                farthest_init: (&far).into(),
            })
        }
    };

    let oracle_cost = if config.oracle {
        let (best, cost) = BruteForce::default().run(&work, config.k)?;
        Some(match config.mode {
            RunMode::Kmedian => cost,
            // best over oracle-optimal centers refined by Lloyd
            RunMode::KmeansInit => lloyd_refine(&inst, &best, config.lloyd_iters)?.cost,
        })
    } else {
        None
    };

    let report = pipeline.record(&work, config.mode.as_str(), config.solver.as_str(), config.timings);
    Ok(BenchResult { record: BenchRecord { report, oracle_cost, kmeans }, pipeline, time_ms })
}

/// Runs seeds `seed, seed + 1, ..., seed + repeat - 1` in parallel, returned in seed order.
pub fn run_sweep(config: &RunConfig, repeat: usize) -> Result<Vec<BenchResult>> {
    (0..repeat as u64)
        .into_par_iter()
        .map(|r| run_bench(&config.with_seed(config.seed.wrapping_add(r))))
        .collect()
}

pub const CSV_HEADER: &str = "seed,n,k,mode,final_cost,oracle_cost,ratio,time_ms";

/// CSV sweep output, one row per run.
pub fn write_csv<W: Write>(mut out: W, results: &[BenchResult]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        let rep = &r.record.report;
        let cost = r.final_cost();
        let (oracle, ratio) = match r.record.oracle_cost {
            Some(o) => (o.to_string(), if o > 0.0 { (cost / o).to_string() } else { String::new() }),
            None => (String::new(), String::new()),
        };
        writeln!(out, "{},{},{},{},{},{},{},{:.3}", rep.seed, rep.n, rep.k, rep.mode, cost, oracle, ratio, r.time_ms)?;
    }
    Ok(())
}
