//! `qsdc`: run bidirectional entanglement-based message exchange experiments.

mod modes;
mod output;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsdc_core::session::replay;
use qsdc_core::Transcript;

use crate::spec::{read_config, RunArgs, RunSpec};

#[derive(Debug, Parser)]
#[command(name = "qsdc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one experiment mode.
    Run(Box<RunArgs>),
    /// Re-run a saved transcript and confirm it reproduces byte for byte.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
    },
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Output(anyhow::Error),
    Aborted,
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Output(_) => 2,
            Failure::Aborted => 3,
            Failure::Internal(_) => 1,
        }
    }
}

/// Output targets must sit in an existing directory; checked before any work.
fn check_writable(path: Option<&Path>, flag: &str) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    if path.is_dir() {
        return Err(Failure::Config(format!(
            "--{flag} {} is a directory",
            path.display()
        )));
    }
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(Failure::Config(format!(
            "--{flag}: directory {} does not exist",
            parent.display()
        )));
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let text = match &args.config {
        Some(path) => Some(read_config(path).map_err(Failure::Config)?),
        None => None,
    };
    let spec = RunSpec::resolve(args, text.as_deref()).map_err(Failure::Config)?;
    check_writable(spec.out.as_deref(), "out")?;
    check_writable(spec.transcript.as_deref(), "transcript")?;
    modes::run(&spec)
}

fn replay_file(path: &Path) -> Result<(), Failure> {
    let original = Transcript::read_from(path)
        .map_err(|e| Failure::Config(format!("cannot load {}: {e}", path.display())))?;
    let again = replay(&original).map_err(|e| Failure::Internal(e.into()))?;
    if again.to_jsonl() != original.to_jsonl() {
        return Err(Failure::Internal(anyhow::anyhow!(
            "replay of {} diverges from the saved transcript",
            path.display()
        )));
    }
    println!("replay: identical ({} records)", original.records().len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Replay { transcript } => replay_file(&transcript),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("error: {msg}"),
                Failure::Output(e) | Failure::Internal(e) => eprintln!("error: {e:#}"),
                Failure::Aborted => eprintln!("protocol aborted"),
            }
            ExitCode::from(f.code())
        }
    }
}
