use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sublinear_vc::estimator::{run_trials, trial_seed, DEFAULT_DELTA, SCHEMA_VERSION};
use sublinear_vc::verify::{self, EquivalenceScale, Level, SuiteOutcome};
use sublinear_vc::{estimate_vc, parse_graph, EstimateConfig, EstimateReport, GenSpec, Mode, MultiGraph};

const THREADS_ENV: &str = "SUBLINEAR_VC_THREADS";

#[derive(Parser)]
#[command(name = "sublinear-vc", version, about = "Sublinear-time (2, eps)-estimates of minimum vertex cover size")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the vertex cover size of one graph over independent trials.
    Estimate(EstimateArgs),
    /// Sweep generated graphs over n, d and eps and emit one row per cell.
    Bench(BenchArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Graph file in edge-list format (`-` reads stdin).
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Generator spec, e.g. `regular:n=1000,d=10,seed=7`.
    #[arg(long, group = "source")]
    gen: Option<GenSpec>,
}

#[derive(Args)]
struct Tuning {
    #[arg(long, value_parser = parse_mode, default_value = "max-deg")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_unit, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Fixed sample count instead of the Hoeffding bound.
    #[arg(long)]
    samples: Option<usize>,
    /// Degree bound d (max-deg) or average degree bound (avg-deg).
    #[arg(long)]
    degree_bound: Option<usize>,
    /// Always sample, even on graphs small enough to solve exactly.
    #[arg(long)]
    no_fallback: bool,
}

impl Tuning {
    fn config(&self, eps: f64) -> EstimateConfig {
        EstimateConfig {
            delta: self.delta,
            samples: self.samples,
            degree_bound: self.degree_bound,
            allow_fallback: !self.no_fallback,
            ..EstimateConfig::new(eps, self.mode, self.seed)
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = parse_unit)]
    eps: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    /// Base generator spec; `--n` and `--d` override its fields per cell.
    #[arg(long)]
    gen: GenSpec,
    /// Comma-separated vertex counts.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated degrees.
    #[arg(long)]
    d: Option<String>,
    /// Comma-separated accuracy parameters.
    #[arg(long)]
    eps: String,
    /// Graph seeds per cell.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[command(flatten)]
    tuning: Tuning,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_level, default_value = "quick")]
    level: Level,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|_| "expected one of max-deg, avg-deg, dense, plain".to_string())
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|_| "expected quick or full".to_string())
}

fn parse_unit(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x < 1.0 => Ok(x),
        _ => Err(format!("`{s}` is not a decimal in (0, 1)")),
    }
}

enum Failure {
    Usage(String),
    Verify,
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<sublinear_vc::Error> for Failure {
    fn from(e: sublinear_vc::Error) -> Self {
        match e {
            sublinear_vc::Error::Config(m) => Failure::Usage(m),
            e => Failure::Runtime(e.into()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => return Err(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load_graph(source: &Source, mode: Mode) -> Result<MultiGraph, Failure> {
    let g = match (&source.input, &source.gen) {
        (Some(path), None) => {
            let text = if path.as_os_str() == "-" {
                io::read_to_string(io::stdin()).context("reading graph from stdin")?
            } else {
                match fs::read_to_string(path) {
                    Ok(t) => t,
                    Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
                }
            };
            match parse_graph(&text) {
                Ok(g) => g,
                Err(e) => return usage(format!("{}: {e}", path.display())),
            }
        }
        (None, Some(spec)) => spec.generate().map_err(|e| Failure::Usage(e.to_string()))?,
        _ => return usage("exactly one of --input and --gen is required"),
    };
    Ok(if mode == Mode::Dense { g.with_pair_index() } else { g })
}

fn emit(output: &Output, body: &[u8]) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(body).context("writing stdout")?,
    }
    Ok(())
}

#[derive(Serialize)]
struct QueryMeans {
    degree: f64,
    neighbor: f64,
    pair: f64,
    total: f64,
}

#[derive(Serialize)]
struct Summary {
    trials: usize,
    median_estimate: f64,
    mean_queries: QueryMeans,
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    schema_version: u32,
    reports: &'a [EstimateReport],
    summary: Summary,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn summarize(reports: &[EstimateReport]) -> Summary {
    let t = reports.len() as f64;
    let mean = |f: &dyn Fn(&EstimateReport) -> u64| reports.iter().map(|r| f(r) as f64).sum::<f64>() / t;
    Summary {
        trials: reports.len(),
        median_estimate: median(reports.iter().map(|r| r.estimate).collect()),
        mean_queries: QueryMeans {
            degree: mean(&|r| r.queries.degree_queries),
            neighbor: mean(&|r| r.queries.neighbor_queries),
            pair: mean(&|r| r.queries.pair_queries),
            total: mean(&|r| r.queries.total()),
        },
    }
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), Failure> {
    let cfg = a.tuning.config(a.eps);
    cfg.validate()?;
    let g = load_graph(&a.source, cfg.mode)?;
    let reports = run_trials(&g, &cfg, a.trials as usize)?;
    let summary = summarize(&reports);
    let body = match a.output.format {
        Format::Json => {
            let out = EstimateOutput {
                schema_version: SCHEMA_VERSION,
                reports: &reports,
                summary,
            };
            let mut s = serde_json::to_string_pretty(&out).context("serializing report")?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(EstimateReport::CSV_HEADER).context("writing csv")?;
            for r in &reports {
                w.write_record(r.csv_record()).context("writing csv")?;
            }
            eprintln!(
                "summary: {} trials, median estimate {}, mean queries {}",
                summary.trials, summary.median_estimate, summary.mean_queries.total
            );
            w.into_inner().context("flushing csv")?
        }
    };
    emit(&a.output, &body)
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>, Failure> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return usage(format!("--{flag} sweep list is empty"));
    }
    items
        .into_iter()
        .map(|s| s.parse().map_err(|_| Failure::Usage(format!("bad --{flag} value `{s}`"))))
        .collect()
}

#[derive(Serialize)]
struct BenchRow {
    family: String,
    n: usize,
    d: Option<usize>,
    eps: f64,
    seed: u64,
    mode: Mode,
    estimate: f64,
    mu: f64,
    samples: usize,
    degree_queries: u64,
    neighbor_queries: u64,
    pair_queries: u64,
    mean_calls: f64,
    max_calls: u64,
    mo_evaluations: u64,
    fallback: bool,
    wall_time_ms: f64,
    schema_version: u32,
}

impl BenchRow {
    fn new(spec: &GenSpec, r: EstimateReport, wall_time_ms: f64) -> Self {
        BenchRow {
            family: spec.family.to_string(),
            n: r.n,
            d: spec.d,
            eps: r.config.eps,
            seed: spec.seed,
            mode: r.effective_mode,
            estimate: r.estimate,
            mu: r.mu,
            samples: r.samples,
            degree_queries: r.queries.degree_queries,
            neighbor_queries: r.queries.neighbor_queries,
            pair_queries: r.queries.pair_queries,
            mean_calls: r.mean_calls,
            max_calls: r.max_calls,
            mo_evaluations: r.mo_evaluations,
            fallback: r.fallback,
            wall_time_ms,
            schema_version: r.schema_version,
        }
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let ns: Vec<usize> = match &a.n {
        Some(raw) => parse_list("n", raw)?,
        None => vec![a.gen.n],
    };
    let ds: Vec<Option<usize>> = match &a.d {
        Some(raw) => parse_list("d", raw)?.into_iter().map(Some).collect(),
        None => vec![a.gen.d],
    };
    let epss: Vec<f64> = parse_list("eps", &a.eps)?;
    for &eps in &epss {
        parse_unit(&eps.to_string()).map_err(Failure::Usage)?;
    }
    let mut cells = Vec::new();
    for &n in &ns {
        for &d in &ds {
            for &eps in &epss {
                for t in 0..a.trials as usize {
                    let spec = GenSpec {
                        n,
                        d,
                        seed: trial_seed(a.gen.seed, t),
                        ..a.gen.clone()
                    };
                    let cfg = EstimateConfig {
                        seed: spec.seed,
                        ..a.tuning.config(eps)
                    };
                    cfg.validate()?;
                    cells.push((spec, cfg));
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|(spec, cfg)| -> Result<BenchRow, Failure> {
            let mut g = spec.generate().map_err(|e| Failure::Usage(format!("{spec}: {e}")))?;
            if cfg.mode == Mode::Dense {
                g = g.with_pair_index();
            }
            let start = Instant::now();
            let r = estimate_vc(&g, cfg)?;
            Ok(BenchRow::new(spec, r, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let body = match a.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).context("writing csv")?;
            }
            w.into_inner().context("flushing csv")?
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows).context("serializing rows")?;
            s.push('\n');
            s.into_bytes()
        }
    };
    emit(&a.output, &body)
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let outcomes: Vec<SuiteOutcome> = if a.inject_fault {
        vec![verify::suite_equivalence(&EquivalenceScale::for_level(a.level), true)]
    } else {
        verify::run_all(a.level)
    };
    for o in &outcomes {
        println!("{o}");
    }
    match outcomes.iter().find(|o| !o.passed) {
        None => {
            println!("all {} suites passed at level {}", outcomes.len(), a.level);
            Ok(())
        }
        Some(failed) => {
            match &failed.counterexample {
                Some(c) => println!("counterexample from {}:\n{c}", failed.name),
                None => println!("{} failed without a counterexample", failed.name),
            }
            Err(Failure::Verify)
        }
    }
}
