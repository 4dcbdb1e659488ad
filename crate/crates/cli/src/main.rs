//! `resopp` — generate, train, evaluate and query the research-
//! opportunity recommender from the command line.
//!
//! Exit codes are scriptable: 0 on success, 1 on any input or validation
//! problem (bad flags, unreadable configs or datasets, missing models,
//! unknown students), 2 when training diverges numerically.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use resopp_core::datagen::GenError;
use resopp_core::eval::EvalError;
use resopp_core::models::ModelError;

mod commands;
mod config;

use config::{Overrides, RunConfig};

/// A command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 1: bad inputs, bad configuration, missing files.
    #[error("{0}")]
    Input(String),
    /// Exit code 2: a numerical failure during training.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> CliError {
        match e {
            ModelError::NonFiniteLoss(_) | ModelError::NonFiniteWeights(_) => {
                CliError::Numerical(format!("training diverged: {e}"))
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        match e {
            EvalError::Model(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<resopp_core::features::FeatureError> for CliError {
    fn from(e: resopp_core::features::FeatureError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "resopp",
    version,
    about = "Recommends research opportunities to students from their academic records",
    after_help = "Configuration precedence: command-line flags override the --config file, \
                  which overrides built-in defaults. Every command writes a \
                  <command>_manifest.json into the output directory recording the resolved \
                  configuration."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (seven CSV tables) into the
    /// dataset directory.
    Datagen(CommonArgs),
    /// Train one model per (task, method, feature set) on the pre-cutoff
    /// window; models land in <out>/models/.
    Train(CommonArgs),
    /// Evaluate trained models on the post-cutoff window and write
    /// task1_report.csv / task2_map.csv.
    Eval(EvalArgs),
    /// Print the top-k opportunities for one student, tab-separated.
    Recommend(RecommendArgs),
    /// Print dataset counts and rates.
    Summarize(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// TOML config file; flags given here override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dataset directory holding the seven CSV tables.
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Output directory for artifacts and manifests.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Temporal cutoff, written YEAR.HALF (for example 2014.1).
    #[arg(long, value_name = "YEAR.HALF")]
    cutoff: Option<String>,
    /// Tasks to run: 1 (applicant prediction) and/or 2 (ranking).
    #[arg(long, value_delimiter = ',', value_name = "N")]
    task: Vec<u8>,
    /// Methods: baseline_majority, baseline_always_positive, logreg, gbt,
    /// svm (or "baseline" for the majority mode).
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    method: Vec<String>,
    /// Feature sets: base, base_plus, base_plus_plus.
    #[arg(long, value_delimiter = ',', value_name = "SET")]
    features: Vec<String>,
    /// Ranking cut-offs for MAP@k; recommend uses the first value.
    #[arg(long, value_delimiter = ',', value_name = "K")]
    k: Vec<usize>,
    /// Base seed for generation, sampling and the random baseline.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Train any missing model on the fly instead of failing.
    #[arg(long)]
    train_if_missing: bool,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trained Task-2 model file (see <out>/models/).
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Student to rank the catalog for.
    #[arg(long, value_name = "ID")]
    student: String,
}

impl CommonArgs {
    fn resolve(&self, train_if_missing: bool) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            dataset: self.dataset.clone(),
            out: self.out.clone(),
            cutoff: self.cutoff.clone(),
            tasks: self.task.clone(),
            methods: self.method.clone(),
            features: self.features.clone(),
            k: self.k.clone(),
            seed: self.seed,
            train_if_missing,
        };
        RunConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Datagen(args) => commands::datagen(&args.resolve(false)?),
        Command::Train(args) => commands::train(&args.resolve(false)?),
        Command::Eval(args) => {
            let config = args.common.resolve(args.train_if_missing)?;
            commands::eval(&config)
        }
        Command::Recommend(args) => {
            let config = args.common.resolve(false)?;
            let k = config.k.first().copied().unwrap_or(10);
            commands::recommend(&config, &args.model, &args.student, k)
        }
        Command::Summarize(args) => commands::summarize_cmd(&args.resolve(false)?),
    }
}

fn main() -> ExitCode {
    // Clap's default exit code for usage errors is 2, which this tool
    // reserves for numerical failures; remap usage problems to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
