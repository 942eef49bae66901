use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};

use ssmedian::bench::{run_sweep, write_csv, InputFormat, InputSource, RunConfig, RunMode, SolverKind};
use ssmedian::metric::MetricMode;
use ssmedian::Error;

/// Approximate k-median clustering by successive sampling.
#[derive(Debug, Parser)]
#[command(name = "ssmedian", version)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "generate"])))]
struct Cli {
    /// Input file (points or matrix, see --format).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Generator spec, e.g. `gaussian-mixture:centers=4,per=50,sigma=0.1,box=10`.
    #[arg(long)]
    generate: Option<String>,

    #[arg(long, default_value = "points", value_parser = ["points", "matrix"])]
    format: String,

    /// Metric for coordinate inputs.
    #[arg(long, default_value = "euclidean", value_parser = ["euclidean", "squared-euclidean"])]
    metric: String,

    #[arg(long)]
    k: usize,

    #[arg(long, default_value_t = ssmedian::sampler::DEFAULT_ALPHA)]
    alpha: f64,

    #[arg(long, default_value_t = ssmedian::sampler::DEFAULT_BETA)]
    beta: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value = "kmedian", value_parser = ["kmedian", "kmeans-init"])]
    mode: String,

    /// Extraction solver.
    #[arg(long, default_value = "local-search", value_parser = ["local-search", "brute-force"])]
    solver: String,

    /// Write sampler rounds as JSON lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write a per-seed CSV summary here.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Number of consecutive seeds to run.
    #[arg(long, default_value_t = 1)]
    repeat: usize,

    /// Compare against the exact brute-force optimum.
    #[arg(long)]
    oracle: bool,

    /// Write zero stage timings so reports are reproducible byte for byte.
    #[arg(long)]
    no_timings: bool,

    /// Iteration cap for Lloyd refinement in kmeans-init mode.
    #[arg(long, default_value_t = 100)]
    lloyd_iters: usize,
}

fn run(cli: Cli) -> Result<(), Error> {
    let input = match (cli.input, cli.generate) {
        (Some(path), None) => InputSource::File { path, format: cli.format.parse::<InputFormat>()? },
        (None, Some(spec)) => InputSource::Generate(spec.parse()?),
        _ => unreachable!("clap enforces exactly one source"),
    };
    if cli.repeat == 0 {
        return Err(Error::InvalidParams("--repeat must be at least 1".into()));
    }
    let config = RunConfig {
        input,
        k: cli.k,
        mode: cli.mode.parse::<RunMode>()?,
        metric: cli.metric.parse::<MetricMode>()?,
        alpha: cli.alpha,
        beta: cli.beta,
        seed: cli.seed,
        solver: cli.solver.parse::<SolverKind>()?,
        oracle: cli.oracle,
        timings: !cli.no_timings,
        lloyd_iters: cli.lloyd_iters,
    };

    let results = run_sweep(&config, cli.repeat)?;

    let json = if results.len() == 1 {
        serde_json::to_string_pretty(&results[0].record)?
    } else {
        serde_json::to_string_pretty(&results.iter().map(|r| &r.record).collect::<Vec<_>>())?
    };
    match &cli.out {
        Some(path) => std::fs::write(path, format!("{json}\n"))?,
        None => println!("{json}"),
    }
    if let Some(path) = &cli.trace {
        let mut out = BufWriter::new(File::create(path)?);
        for r in &results {
            r.write_trace(&mut out)?;
        }
        out.flush()?;
    }
    if let Some(path) = &cli.csv {
        let mut out = BufWriter::new(File::create(path)?);
        write_csv(&mut out, &results)?;
        out.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
