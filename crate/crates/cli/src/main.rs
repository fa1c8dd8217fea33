//! Command-line front end: synth -> augment -> train -> eval, plus the
//! claim-verification suites and a cross-run report. Every command writes a
//! run manifest into its output directory so results stay traceable.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad input or io, 3 bad
//! configuration or internal contract violation.

mod cmd;
mod runinfo;
mod svg;

use clap::{Parser, Subcommand};
use std::process::ExitCode;
use zachvit_core::Error;

#[derive(Parser)]
#[command(name = "zachvit", version, about = "Zero-token vision transformer pipeline")]
struct Cli {
    /// Print the fully resolved configuration and exit without writing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled video dataset.
    Synth(cmd::SynthArgs),
    /// Render stride images from a dataset under a shuffle regime.
    Augment(cmd::AugmentArgs),
    /// Train a model on an augmented dataset.
    Train(cmd::TrainArgs),
    /// Score a checkpoint on one split of an augmented dataset.
    Eval(cmd::EvalArgs),
    /// Run the claim-verification suites.
    Verify(cmd::VerifyArgs),
    /// Summarize training runs into CSV tables and SVG plots.
    Report(cmd::ReportArgs),
}

/// Print a line to stdout, exiting quietly if the reader closed the pipe
/// (`zachvit ... | head` must not panic).
pub(crate) fn emit(line: &str) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{line}").is_err() {
        std::process::exit(0);
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Verification(_) => 1,
        Error::Input(_) | Error::Io { .. } | Error::Json { .. } => 2,
        Error::Config(_) | Error::Geometry(_) | Error::Contract(_) | Error::NonFinite { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd::synth(a, cli.dry_run),
        Command::Augment(a) => cmd::augment(a, cli.dry_run),
        Command::Train(a) => cmd::train_cmd(a, cli.dry_run),
        Command::Eval(a) => cmd::eval(a, cli.dry_run),
        Command::Verify(a) => cmd::verify(a, cli.dry_run),
        Command::Report(a) => cmd::report(a, cli.dry_run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
