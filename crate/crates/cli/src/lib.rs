//! Command-line front end: figure reproduction, parameter sweeps and
//! config validation.
//!
//! Exit codes: 0 success, 1 validation findings, 2 usage or config error,
//! 3 numeric failure.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod figures;
pub mod sweep;
pub mod table;
pub mod validate;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use config::RunConfig;
use figures::Figure;
use table::{write_json, Metadata, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] clockmag::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Io(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "clockmag", version, about = "Clock-state magnetometry toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Evaluate an operation over the `[sweep]` axes.
    Sweep,
    /// Check regime and resolution preconditions without running.
    Validate,
}

fn load(path: Option<&Path>, required: bool) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None if required => Err(CliError::Usage("--config is required for this command".into())),
        None => Ok(RunConfig::default()),
    }
}

fn emit(cfg: &RunConfig, out: &Path, stem: &str, table: &ResultTable, summary: serde_json::Value, seed: Option<u64>) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    if cfg.output.csv {
        table.write(&out.join(format!("{stem}.csv")))?;
    }
    if cfg.output.json {
        let meta = Metadata { version: clockmag::VERSION.to_string(), config_hash: cfg.hash(), seed };
        write_json(&out.join(format!("{stem}.json")), &meta, summary)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Reproduce { figure } => {
            let cfg = load(cli.config.as_deref(), false)?;
            let (table, summary) = figures::reproduce(*figure, &cfg)?;
            emit(&cfg, &cli.out, figure.id(), &table, summary, None)?;
            eprintln!("{}: {} rows written to {}", figure.id(), table.rows.len(), cli.out.display());
            Ok(0)
        }
        Command::Sweep => {
            let cfg = load(cli.config.as_deref(), true)?;
            let block = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] block".into()))?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            let (table, summary, stochastic) = sweep::run(block, seed)?;
            emit(&cfg, &cli.out, "sweep", &table, summary, stochastic.then_some(seed))?;
            eprintln!("sweep: {} rows written to {}", table.rows.len(), cli.out.display());
            Ok(0)
        }
        Command::Validate => {
            let cfg = load(cli.config.as_deref(), true)?;
            let found = validate::findings(&cfg);
            for f in &found {
                println!("{f}");
            }
            if found.is_empty() {
                println!("no findings");
                Ok(0)
            } else {
                Ok(1)
            }
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let work = || match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            2
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                2
            }
        },
        None => work(),
    }
}
