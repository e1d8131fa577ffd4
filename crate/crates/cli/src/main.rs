//! `depparse`: train, run and score the biaffine dependency parser.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 bad input data,
//! 3 numerical failure, 4 model file problem, 5 validation violations.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "depparse", version, about = "Biaffine graph-based dependency parser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write the best checkpoint.
    Train(TrainArgs),
    /// Annotate CoNLL-X input with predicted heads and relations.
    Parse(ParseArgs),
    /// Score predicted trees against gold trees.
    Evaluate(EvaluateArgs),
    /// Check that every sentence is a well-formed tree.
    Validate(InputArgs),
    /// Print corpus statistics.
    Stats(InputArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training treebank.
    #[arg(long)]
    pub train: PathBuf,
    /// Development treebank used for model selection; may be empty.
    #[arg(long)]
    pub dev: PathBuf,
    /// Where to write the checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// File of `key=value` lines overriding hyperparameters and training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides any seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Sentences parsed concurrently; defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Leave out gold MT tokens that are pure punctuation.
    #[arg(long)]
    pub exclude_punct: bool,
}

#[derive(Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
}

/// A failed command: the exit code and what to tell the user.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    pub fn model(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 5,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::train(&args),
        Command::Parse(args) => commands::parse(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Validate(args) => commands::validate(&args),
        Command::Stats(args) => commands::stats(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
