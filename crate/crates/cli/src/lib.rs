//! Argument parsing and subcommand dispatch for the `galtrans` binary.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use galtrans::networks::Direction;
use galtrans::trainer::Case;
use galtrans::Error;

pub use config::{EvaluationOptions, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;
pub const EXIT_CONTRACT: i32 = 6;

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Format(_) | Error::CorruptArchive(_) => EXIT_IO,
        Error::Divergence(_) => EXIT_DIVERGENCE,
        Error::ContractViolation(_) => EXIT_CONTRACT,
        Error::Shape(_)
        | Error::InvalidSize(_)
        | Error::Parameter(_)
        | Error::Config(_)
        | Error::EmptyInput(_)
        | Error::Json(_) => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "galtrans", version, about = "Cross-survey galaxy image translation")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON run configuration; desk defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for data generation and training.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    iterations: Option<usize>,
    /// Continue from the saved training state in the run directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    XToY,
    YToX,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::XToY => Direction::XToY,
            DirectionArg::YToX => Direction::YToX,
        }
    }
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Generate the synthetic paired/unpaired archives.
    GenData(CommonArgs),
    /// Train autoencoders, noise emulators and discriminators.
    TrainStep1(TrainArgs),
    /// Train the generators with the step-one noise emulators frozen.
    TrainStep2(TrainArgs),
    /// Train one ablation case (a-f) or the full two-step model.
    TrainVariant {
        #[command(flatten)]
        train: TrainArgs,
        /// Case id a-f or `full`; overrides the config's `variant`.
        #[arg(long)]
        case: Option<String>,
    },
    /// Translate an archive with a trained checkpoint.
    Translate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Source archive; defaults to the generated archive of the source domain.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Checkpoint; defaults to the step-two state in the run directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Omit the emulated noise.
        #[arg(long)]
        no_noise: bool,
    },
    /// Score translations of the held-out pairs and write the report.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// A parsed subcommand with its own options.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    GenData,
    TrainStep1 { resume: bool },
    TrainStep2 { resume: bool },
    TrainVariant { case: Case, resume: bool },
    Translate {
        direction: DirectionArg,
        input: Option<PathBuf>,
        checkpoint: Option<PathBuf>,
        output: Option<PathBuf>,
        noise: bool,
    },
    Evaluate {
        checkpoint: Option<PathBuf>,
        output: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::TrainStep1 { .. } => "train-step1",
            Command::TrainStep2 { .. } => "train-step2",
            Command::TrainVariant { .. } => "train-variant",
            Command::Translate { .. } => "translate",
            Command::Evaluate { .. } => "evaluate",
        }
    }
}

/// Failure before or during dispatch, with the exit status to report.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn build_config(common: &CommonArgs, iterations: Option<usize>, samples: Option<usize>) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::desk(),
    };
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    if let Some(dir) = &common.run_dir {
        config.run_dir = dir.clone();
    }
    if let Some(n) = iterations {
        config.train.iterations = n;
    }
    if let Some(n) = samples {
        config.evaluation.noise_samples = n;
    }
    config.validate()?;
    Ok(config)
}

/// Parse `argv` (including the program name); flags override file values.
pub fn parse_invocation<I, T>(argv: I) -> Result<(Command, RunConfig), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError {
        code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
        message: e.render().to_string(),
    })?;
    Ok(match cli.command {
        CommandArgs::GenData(common) => (Command::GenData, build_config(&common, None, None)?),
        CommandArgs::TrainStep1(t) => (
            Command::TrainStep1 { resume: t.resume },
            build_config(&t.common, t.iterations, None)?,
        ),
        CommandArgs::TrainStep2(t) => (
            Command::TrainStep2 { resume: t.resume },
            build_config(&t.common, t.iterations, None)?,
        ),
        CommandArgs::TrainVariant { train, case } => {
            let config = build_config(&train.common, train.iterations, None)?;
            let case = match case {
                Some(id) => id.parse::<Case>()?,
                None => config.variant.ok_or_else(|| {
                    Error::Config("train-variant needs a case: pass --case or set `variant`".into())
                })?,
            };
            (
                Command::TrainVariant {
                    case,
                    resume: train.resume,
                },
                config,
            )
        }
        CommandArgs::Translate {
            common,
            direction,
            input,
            checkpoint,
            output,
            no_noise,
        } => (
            Command::Translate {
                direction,
                input,
                checkpoint,
                output,
                noise: !no_noise,
            },
            build_config(&common, None, None)?,
        ),
        CommandArgs::Evaluate {
            common,
            checkpoint,
            output,
            samples,
        } => (
            Command::Evaluate { checkpoint, output },
            build_config(&common, None, samples)?,
        ),
    })
}

pub use commands::dispatch;

/// Parse, dispatch and report; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (command, config) = match parse_invocation(argv) {
        Ok(v) => v,
        Err(e) => {
            if e.code == EXIT_OK {
                print!("{}", e.message);
            } else {
                eprint!("{}", e.message);
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            return e.code;
        }
    };
    match dispatch(&command, &config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("galtrans {}: {e}", command.name());
            exit_code(&e)
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
