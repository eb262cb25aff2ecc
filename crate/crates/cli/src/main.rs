use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gamma_runner::{run, Command, Invocation};

#[derive(Parser)]
#[command(name = "gamma", version, about = "Projector checks, periodic solves and Willis reductions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run config
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set grid.dims.0=32`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check canonical and printed projectors at seeded modes
    Verify(Common),
    /// Solve one periodic cell problem
    Solve(Common),
    /// Extract the effective operator of a periodic cell
    Effective(Common),
    /// Reduce Willis moduli to kernels and cross-check them
    Willis(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Effective(c) => (Command::Effective, c),
        Cmd::Willis(c) => (Command::Willis, c),
    };
    let inv = Invocation {
        command,
        config: c.config,
        sets: c.sets,
        out: c.out,
    };
    match run(&inv) {
        Ok(report) => {
            eprintln!(
                "{}: {} ({} findings)",
                command.name(),
                if report.passed { "passed" } else { "FAILED" },
                report.findings.len()
            );
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
