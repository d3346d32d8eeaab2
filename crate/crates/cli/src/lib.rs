//! Batch front end: training, evaluation, cross-evaluation, fixture export
//! and replay from a run manifest.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 numerical failure,
//! 4 artifact mismatch (corrupt or incompatible checkpoint, changed fixtures).

pub mod config;
pub mod cross_eval;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod train;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use drlc_core::envs::{scenario, ScenarioName};
use drlc_core::Error;

pub use error::{CliError, CliResult, EXIT_FAILURE, EXIT_MISMATCH, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
pub use manifest::{fixture_hash, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "drlc", version, about = "Train and evaluate driving agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one or more independently seeded models.
    Train(train::TrainArgs),
    /// Evaluate a checkpoint over several episodes.
    Eval(eval::EvalArgs),
    /// Evaluate every checkpoint under a directory on a list of scenarios.
    CrossEval(cross_eval::CrossEvalArgs),
    /// Write the built-in scenario layouts as JSON fixtures.
    ExportFixtures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli.command, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: &Command, argv: &[String]) -> CliResult<()> {
    match command {
        Command::Train(a) => train::run(a, argv),
        Command::Eval(a) => eval::run(a, argv),
        Command::CrossEval(a) => cross_eval::run(a, argv),
        Command::ExportFixtures { out } => export_fixtures(out),
        Command::Replay { manifest, out } => replay(manifest, out, argv),
    }
}

pub fn export_fixtures(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io { path: out.into(), source: e })?;
    for name in ScenarioName::ALL {
        let path = out.join(format!("{name}.json"));
        std::fs::write(&path, scenario(name)?.to_fixture_json()?)
            .map_err(|e| Error::Io { path: path.clone(), source: e })?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn replay(manifest_path: &Path, out: &Path, argv: &[String]) -> CliResult<()> {
    let m = RunManifest::read(manifest_path)?;
    m.verify_fixtures()?;
    let bad = |e: serde_json::Error| CliError::Usage(format!("manifest config: {e}"));
    match m.command.as_str() {
        "train" => train::execute(&serde_json::from_value(m.config).map_err(bad)?, out, argv),
        "eval" => eval::execute(&serde_json::from_value(m.config).map_err(bad)?, out, argv),
        "cross-eval" => cross_eval::execute(&serde_json::from_value(m.config).map_err(bad)?, out, argv),
        other => Err(CliError::Usage(format!("cannot replay command {other:?}"))),
    }
}
