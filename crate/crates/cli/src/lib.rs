//! `boardsense` command line: dataset generation, benchmarking, statistics,
//! reporting, the review pipeline, and the HTTP API behind the review UI.

use std::ffi::OsString;
use std::path::PathBuf;

use boardsense_core::pipeline::MonitorConfig;
use boardsense_core::recognizers::Algorithm;
use boardsense_core::simulation::NoiseModel;
use boardsense_core::stats::Adjustment;
use clap::{Args, Parser, Subcommand};

pub mod analysis;
pub mod commands;
pub mod server;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_ALERT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "boardsense", version, about = "Chessboard-state recognition benchmarks and review tooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate games with noisy observations and write them to a directory.
    Gen(GenArgs),
    /// Run the measurement protocol and log one tracking run per algorithm.
    Bench(BenchArgs),
    /// Normality, Kruskal-Wallis, Dunn and Z tests over a measurements CSV.
    Stats(StatsArgs),
    /// Per-algorithm summary table of a measurements CSV.
    Report(ReportArgs),
    /// Run recognizers over a dataset and queue the results for review.
    Ingest(IngestArgs),
    /// Print the accuracy monitor; exits 2 when the alert is raised.
    Monitor(MonitorArgs),
    /// Serve the review HTTP API and, if present, the UI assets.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Seed for game generation and observation noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise parameters as key=value pairs: bias, spread, clamp, concentration.
    #[arg(long, value_parser = parse_noise, default_value = "")]
    pub noise: NoiseSpec,
    /// Relative weight of captures when sampling moves.
    #[arg(long, default_value_t = 1.0)]
    pub capture_weight: f64,
    /// Relative weight of castling when sampling moves.
    #[arg(long, default_value_t = 1.0)]
    pub castle_weight: f64,
    #[arg(long, default_value_t = 80)]
    pub max_plies: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub bias: f64,
    pub spread: f64,
    pub clamp: f64,
    pub concentration: f64,
}

impl NoiseSpec {
    pub fn model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            bias: self.bias,
            spread: self.spread,
            clamp: self.clamp,
            type_concentration: self.concentration,
            seed,
        }
    }
}

pub fn parse_noise(text: &str) -> Result<NoiseSpec, String> {
    let d = NoiseModel::default();
    let mut spec = NoiseSpec {
        bias: d.bias,
        spread: d.spread,
        clamp: d.clamp,
        concentration: d.type_concentration,
    };
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("{key}: {value:?} is not a number"))?;
        match key {
            "bias" | "eps" => spec.bias = value,
            "spread" | "sigma" => spec.spread = value,
            "clamp" | "delta" => spec.clamp = value,
            "concentration" | "kappa" => spec.concentration = value,
            _ => return Err(format!("unknown noise parameter {key:?}")),
        }
    }
    spec.model(0).validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub games: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset directory written by `gen`; simulated on the fly when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated algorithms, e.g. sd,esd,ia,cpa,cps,tk2.
    #[arg(long, value_delimiter = ',', default_value = "sd,esd,ia,cpa,cps,tk2,tk3,tk4,tk5")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Measurements CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Tracking store root.
    #[arg(long, default_value = "runs")]
    pub store: PathBuf,
    /// synthetic:<watts>, trace:<csv path> or rapl[:<energy_uj path>].
    #[arg(long, default_value = "synthetic:15")]
    pub meter: String,
    #[arg(long, default_value_t = 5.0)]
    pub warmup: f64,
    #[arg(long, default_value_t = 60.0)]
    pub batch: f64,
    #[arg(long, default_value_t = 10.0)]
    pub cooldown: f64,
    /// Simulated CPU work per model invocation.
    #[arg(long, default_value_t = 2000)]
    pub work: u32,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Measurements CSV written by `bench`.
    pub measurements: PathBuf,
    /// Multiple-comparison adjustment for Dunn's test: holm, bonferroni, none.
    #[arg(long, default_value = "holm")]
    pub adjust: Adjustment,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Measurements CSV written by `bench`.
    pub measurements: PathBuf,
    /// Row order; every listed algorithm must be present.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "review")]
    pub pipeline: PathBuf,
    #[arg(long, default_value = "cps")]
    pub algorithm: Algorithm,
    /// Stop after this many plies.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MonitorOptions {
    #[arg(long, default_value_t = 0.90)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2.0)]
    pub budget: f64,
    #[arg(long, default_value_t = 50)]
    pub window: usize,
}

impl MonitorOptions {
    pub fn config(&self) -> MonitorConfig {
        MonitorConfig {
            accuracy_threshold: self.threshold,
            latency_budget_s: self.budget,
            window: self.window,
        }
    }
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long, default_value = "review")]
    pub pipeline: PathBuf,
    #[command(flatten)]
    pub monitor: MonitorOptions,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "review")]
    pub pipeline: PathBuf,
    #[arg(long, default_value = "runs")]
    pub store: PathBuf,
    /// Directory of built UI assets served at `/`.
    #[arg(long, default_value = "ui/dist")]
    pub ui: PathBuf,
    #[command(flatten)]
    pub monitor: MonitorOptions,
}

/// Parse and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
