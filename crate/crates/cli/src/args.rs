use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trendcast_core::ingest::{DedupPolicy, Format};
use trendcast_core::predictors::PredictorSpec;
use trendcast_core::Day;

use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "trendcast",
    version,
    about = "Predict trending objects in timestamped bipartite networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw dataset into the canonical edge list plus id maps.
    Ingest(IngestArgs),
    /// Dataset size and time span under both dedup policies.
    Stats(StatsArgs),
    /// Score and rank every candidate object at one date.
    Score(ScoreArgs),
    /// One metric row per (test date, n).
    Evaluate(EvaluateArgs),
    /// TBP metrics across a grid of decay rates.
    SweepGamma(SweepArgs),
    /// PBP metrics across a grid of λ at a fixed history window.
    SweepLambda(SweepArgs),
    /// Best TBP and PBP parameters for each future-window length.
    SweepTf(SweepTfArgs),
    /// Rank shift r_f - r_p of the truly most popular objects.
    Rankshift(RankshiftArgs),
    /// Generate a synthetic network with aging preferential attachment.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key=value` file; keys are long flag names. Command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelfLoops {
    Keep,
    Drop,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Input dataset; canonical binary graphs are detected automatically.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "generic-tsv", value_parser = parse_format)]
    pub format: Format,
    /// Ratings strictly above this value become links.
    #[arg(long, default_value_t = 2)]
    pub threshold: u8,
    /// Default: drop for facebook-wall, keep otherwise.
    #[arg(long)]
    pub self_loops: Option<SelfLoops>,
}

#[derive(Debug, Args)]
pub struct Dedup {
    #[arg(long, default_value = "earliest", value_parser = parse_dedup)]
    pub dedup: DedupPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    Cumulative,
    Recent,
    Pbp,
    Tbp,
}

#[derive(Debug, Args)]
pub struct Predictor {
    #[arg(long, value_enum)]
    pub predictor: PredictorKind,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// History window T_P in days (PBP and recent).
    #[arg(long)]
    pub tp: Option<Day>,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Cumulative => "cumulative",
            PredictorKind::Recent => "recent",
            PredictorKind::Pbp => "pbp",
            PredictorKind::Tbp => "tbp",
        }
    }
}

impl Predictor {
    pub fn spec(&self) -> CliResult<PredictorSpec> {
        let kind = self.predictor.name();
        fn need<T>(v: Option<T>, kind: &str, flag: &str) -> CliResult<T> {
            v.ok_or_else(|| CliError::Invalid(format!("--predictor {kind} requires --{flag}")))
        }
        let spec = match self.predictor {
            PredictorKind::Cumulative => PredictorSpec::Cumulative,
            PredictorKind::Recent => PredictorSpec::Recent {
                window: need(self.tp, kind, "tp")?,
            },
            PredictorKind::Pbp => PredictorSpec::Pbp {
                lambda: need(self.lambda, kind, "lambda")?,
                window: need(self.tp, kind, "tp")?,
            },
            PredictorKind::Tbp => PredictorSpec::Tbp {
                gamma: need(self.gamma, kind, "gamma")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Test dates: explicit `--t` days, or `--dates` days sampled with `--seed`.
#[derive(Debug, Args)]
pub struct Dates {
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<Day>>,
    #[arg(long, default_value_t = 10)]
    pub dates: usize,
    #[arg(long, default_value_t = 365)]
    pub min_history: Day,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    /// Keep a random subsample of this many users.
    #[arg(long)]
    pub subsample_users: Option<usize>,
    /// Only users with at least this many raw ratings can be sampled.
    #[arg(long, default_value_t = 0)]
    pub subsample_min_ratings: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub out_format: OutFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Tsv,
    Binary,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    #[command(flatten)]
    pub predictor: Predictor,
    #[arg(long)]
    pub t: Day,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    #[command(flatten)]
    pub predictor: Predictor,
    #[command(flatten)]
    pub dates: Dates,
    /// Future window T_F in days.
    #[arg(long)]
    pub tf: Day,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    #[command(flatten)]
    pub dates: Dates,
    #[arg(long, default_value_t = 30)]
    pub tf: Day,
    /// PBP history window (sweep-lambda only); defaults to --tf.
    #[arg(long)]
    pub tp: Option<Day>,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    pub n: Vec<usize>,
    /// Explicit grid; overrides --grid-steps.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Grid i/steps for i = 0..=steps.
    #[arg(long, default_value_t = 100)]
    pub grid_steps: usize,
}

#[derive(Debug, Args)]
pub struct SweepTfArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    #[arg(long, value_delimiter = ',', default_value = "10,30,60,90")]
    pub tf: Vec<Day>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub dates: usize,
    #[arg(long, default_value_t = 365)]
    pub min_history: Day,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub grid_steps: usize,
}

#[derive(Debug, Args)]
pub struct RankshiftArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub dedup: Dedup,
    #[command(flatten)]
    pub predictor: Predictor,
    #[arg(long)]
    pub t: Day,
    #[arg(long)]
    pub tf: Day,
    #[arg(long, default_value_t = 100)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub objects: usize,
    #[arg(long)]
    pub links_per_day: usize,
    #[arg(long)]
    pub days: usize,
    /// Aging rate of the attachment kernel.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Log-normal fitness spread; unit fitness when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub burst_rate: Option<f64>,
    #[arg(long)]
    pub burst_amplitude: Option<f64>,
    #[arg(long)]
    pub burst_decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: trendcast_core::Error| e.to_string())
}

fn parse_dedup(s: &str) -> Result<DedupPolicy, String> {
    s.parse().map_err(|e: trendcast_core::Error| e.to_string())
}

/// Splices `--key value` pairs from the `--config` file into `argv` for every
/// key not already given on the command line.
pub fn merge_config(mut argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let a = a.to_string_lossy();
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        let shown = PathBuf::from(&path).display().to_string();
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(format!("config file {shown} not found"))
        } else {
            CliError::Invalid(format!("cannot read config file {shown}: {e}"))
        }
    })?;
    let given: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let flag = format!("--{}", key.trim());
        if flag == "--config" {
            return Err(CliError::Invalid(format!(
                "config line {}: nested config not allowed",
                lineno + 1
            )));
        }
        let prefixed = format!("{flag}=");
        if given.iter().any(|a| *a == flag || a.starts_with(&prefixed)) {
            continue;
        }
        argv.push(flag.into());
        argv.push(value.trim().into());
    }
    Ok(argv)
}
