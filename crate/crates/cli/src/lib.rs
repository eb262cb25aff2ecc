//! Config-driven runner: `verify`, `solve`, `effective` and `willis`.
//!
//! Each run reads one JSON config, applies `--set` overrides, and writes a
//! `report.json` plus the command's CSV outputs into the output directory.

pub mod config;
pub mod effective;
pub mod report;
pub mod solve;
pub mod verify;
pub mod willis;

use std::path::{Path, PathBuf};
use std::time::Instant;

use gamma_core::spectral::SolverError;
use thiserror::Error;

pub use config::{apply_overrides, read_config_value, Command, RunConfig};
pub use report::{config_hash, Finding, Results, RunReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("check: {0}")]
    Check(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Solver(SolverError::Singular) | RunError::Check(_) => 1,
            _ => 2,
        }
    }
}

/// What a command produced before it is wrapped into a [`RunReport`].
pub struct Outcome {
    pub passed: bool,
    pub results: Results,
    pub findings: Vec<Finding>,
    pub outputs: Vec<String>,
}

pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub sets: Vec<String>,
    pub out: Option<PathBuf>,
}

/// Runs one command end to end and writes `report.json`.
pub fn run(inv: &Invocation) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut value = read_config_value(&inv.config)?;
    apply_overrides(&mut value, &inv.sets)?;
    let cfg = RunConfig::from_value(value)?;
    if let Some(c) = cfg.command {
        if c != inv.command {
            return Err(RunError::Usage(format!(
                "config is for `{}`, not `{}`",
                c.name(),
                inv.command.name()
            )));
        }
    }
    let resolved = serde_json::to_value(&cfg).map_err(|e| RunError::Config(e.to_string()))?;
    let base = inv.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = inv
        .out
        .clone()
        .or_else(|| cfg.outputs.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;
    let outcome = match inv.command {
        Command::Verify => verify::run(&cfg)?,
        Command::Solve => solve::run(&cfg, &base, &out)?,
        Command::Effective => effective::run(&cfg, &out)?,
        Command::Willis => willis::run(&cfg, &out)?,
    };
    let report = RunReport {
        command: inv.command,
        config_hash: config_hash(&resolved),
        config: resolved,
        passed: outcome.passed,
        results: outcome.results,
        findings: outcome.findings,
        outputs: outcome.outputs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?;
    let path = out.join(&cfg.outputs.report);
    std::fs::write(&path, text + "\n").map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(report)
}
