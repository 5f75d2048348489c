//! The `soa` command line: pricing, tuning, FFT ladders, Monte Carlo, data
//! generation, surrogate training and prediction, benchmarks and reports.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub mod bench;
pub mod config;
pub mod data;
pub mod pricing;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<soa_core::PricingError> for CliError {
    fn from(e: soa_core::PricingError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<soa_surrogates::SurrogateError> for CliError {
    fn from(e: soa_surrogates::SurrogateError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json error: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "soa", version, about = "Fourier option pricing and surrogate pricers")]
pub struct Cli {
    /// TOML file with a table per subcommand; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one option by quadrature.
    Price(pricing::PriceArgs),
    /// Search the (B, N) grid for the smallest accurate configuration.
    Tune(pricing::TuneArgs),
    /// Price a strike ladder with one FFT.
    Fft(pricing::FftArgs),
    /// Monte Carlo benchmark price.
    Mc(pricing::McArgs),
    /// Generate a labelled contract dataset.
    GenData(data::GenDataArgs),
    /// Train a surrogate pricer.
    Train(data::TrainArgs),
    /// Predict with a trained surrogate.
    Predict(data::PredictArgs),
    /// Time pricers and surrogates on a test set.
    Bench(bench::BenchArgs),
    /// Render summary tables and plot data.
    Report(bench::ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Price(_) => "price",
            Command::Tune(_) => "tune",
            Command::Fft(_) => "fft",
            Command::Mc(_) => "mc",
            Command::GenData(_) => "gen-data",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Bench(_) => "bench",
            Command::Report(_) => "report",
        }
    }
}

/// What a subcommand resolved and produced, for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
}

impl Outcome {
    pub fn new<T: Serialize>(config: &T) -> Result<Self> {
        Ok(Outcome { config: serde_json::to_value(config)?, ..Outcome::default() })
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub workers: usize,
    pub seeds: Vec<u64>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Floats in text outputs carry 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn manifest_path(cli_manifest: Option<&Path>, command: &str, outputs: &[PathBuf]) -> PathBuf {
    match (cli_manifest, outputs.first()) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(out)) => with_suffix(out, ".manifest.json"),
        (None, None) => PathBuf::from(format!("soa-{command}.manifest.json")),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let started = unix_now();
    let file = config::load(cli.config.as_deref())?;
    let workers = match cli.workers {
        Some(w) => w,
        None => config::top_level_usize(&file, "workers")?
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    };
    if workers == 0 {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let name = cli.command.name();
    let section = file.get(name);
    let outcome = pool.install(|| match &cli.command {
        Command::Price(a) => pricing::price(a, section),
        Command::Tune(a) => pricing::tune(a, section),
        Command::Fft(a) => pricing::fft(a, section),
        Command::Mc(a) => pricing::mc(a, section),
        Command::GenData(a) => data::gen_data(a, section),
        Command::Train(a) => data::train(a, section),
        Command::Predict(a) => data::predict(a, section),
        Command::Bench(a) => bench::bench(a, section),
        Command::Report(a) => bench::report(a, section),
    })?;
    let manifest = RunManifest {
        subcommand: name.to_string(),
        config: outcome.config,
        workers,
        seeds: outcome.seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: outcome.outputs,
    };
    let path = manifest_path(cli.manifest.as_deref(), name, &manifest.outputs);
    write_text(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Run and map failures to exit codes: 2 for invalid input, 3 for numeric failures.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
