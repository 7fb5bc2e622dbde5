//! `icuae`: generate a synthetic cohort, prepare windows, train and evaluate
//! autoencoders, and export reconstructions and embeddings as CSV.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or configuration error,
//! 4 numeric failure during training or evaluation.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use icuae_core::data::{CareUnit, ImputeMode, Split};
use icuae_core::{ModelKind, OptimizerKind};

pub mod config;
pub mod data_cmds;
pub mod error;
pub mod eval;
pub mod inspect;
pub mod output;
pub mod train_cmd;

pub use error::{CliError, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "icuae",
    version,
    about = "Autoencoders for multivariate ICU timeseries"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic cohort: events.csv, stays.csv, schema.txt.
    Generate(GenerateArgs),
    /// Filter, split, impute, normalize and window a raw cohort.
    Prepare(PrepareArgs),
    /// Train one model on a prepared dataset.
    Train(TrainArgs),
    /// Test-set reconstruction error per model, interval and care unit.
    Eval(EvalArgs),
    /// Per-hour, per-feature reconstruction of one stay.
    Reconstruct(ReconstructArgs),
    /// Embedding vector for every stay of a split.
    Embed(EmbedArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2000)]
    pub patients: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// key=value file (keys: patients, seed); its values replace flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Directory holding events.csv and stays.csv, and optionally schema.txt.
    #[arg(long)]
    pub raw: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Window length in hours.
    #[arg(long, default_value_t = 32)]
    pub interval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep only stays from this care unit.
    #[arg(long)]
    pub care_unit: Option<CareUnit>,
    #[arg(long, default_value_t = ImputeMode::Backward)]
    pub imputation: ImputeMode,
    /// key=value file (keys: interval, seed, care_unit, imputation).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub out: PathBuf,
    /// Must match the dataset's window length when given.
    #[arg(long)]
    pub interval: Option<usize>,
    /// Train and validate on this care unit only.
    #[arg(long)]
    pub care_unit: Option<CareUnit>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Average the loss over real hours only and encode up to each stay's
    /// last real hour.
    #[arg(long)]
    pub mask_padding: bool,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long = "epochs", default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long = "lr", default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = OptimizerKind::Adam)]
    pub optimizer: OptimizerKind,
    /// Global gradient-norm bound, or "none".
    #[arg(long, default_value = "5")]
    pub clip_norm: String,
    /// key=value file (keys: model, interval, care_unit, seed, mask_padding,
    /// batch_size, max_epochs, patience, learning_rate, optimizer, clip_norm).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint files; repeat for several models.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Prepared dataset directories; each checkpoint is matched to one.
    #[arg(long = "data", required = true)]
    pub datasets: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = Split::Test)]
    pub split: Split,
    /// key=value file (keys: split).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub stay_id: u64,
    /// Output CSV; its manifest is written alongside as `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = Split::Test)]
    pub split: Split,
    /// Output CSV; its manifest is written alongside as `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => data_cmds::generate(&a),
        Command::Prepare(a) => data_cmds::prepare(&a),
        Command::Train(a) => train_cmd::train(&a),
        Command::Eval(a) => eval::eval(&a),
        Command::Reconstruct(a) => inspect::reconstruct(&a),
        Command::Embed(a) => inspect::embed(&a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("icuae: {e}");
            e.exit_code()
        }
    }
}
