use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use specaug_cli::{execute, replay, CliError, CommandKind, ExitStatus, Outcome, RunArgs, RunConfig};

/// Spectral feature augmentation operators and their verification suite.
///
/// Exit status: 0 success, 1 verification failure, 2 I/O error,
/// 3 invalid input or configuration, 4 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "specaug", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply an operator to a matrix CSV.
    Augment(RunArgs),
    /// Write push-forward profiles, one CSV per k.
    Profile(RunArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify(RunArgs),
    /// Alignment metrics of two views as a one-row CSV.
    Align(RunArgs),
    /// Generalization and noise bounds as a one-row CSV.
    Bound(RunArgs),
    /// Re-run the configuration stored in a sidecar file.
    Replay {
        sidecar: PathBuf,
        /// Write to this path instead of the recorded one.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(command: Command) -> Result<Outcome, CliError> {
    let (kind, args) = match command {
        Command::Replay { sidecar, output } => return replay(&sidecar, output),
        Command::Augment(a) => (CommandKind::Augment, a),
        Command::Profile(a) => (CommandKind::Profile, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Align(a) => (CommandKind::Align, a),
        Command::Bound(a) => (CommandKind::Bound, a),
    };
    execute(kind, RunConfig::from_args(&args)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() {
                ExitStatus::Validation
            } else {
                ExitStatus::Success
            };
            let _ = e.print();
            return ExitCode::from(status.code());
        }
    };
    match run(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.status.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status().code())
        }
    }
}
