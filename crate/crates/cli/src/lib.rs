//! `rulerank`: synthesize or prepare retail data, mine and score targeted
//! rules, compare measure rankings, and serve the results.

mod commands;
mod manifest;

pub use commands::{
    compare, mine_score, prepare, serve, synth, CompareArgs, CompareSummary, MineScoreArgs,
    PrepareArgs, PrepareSummary, ServeArgs, SynthArgs,
};
pub use manifest::{run_manifest, RunConfig, TargetChoice};

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit code 1).
    Usage(String),
    /// Unreadable, inconsistent or unwritable data (exit code 2).
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rulerank_core::Error> for CliError {
    fn from(e: rulerank_core::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rulerank", version, about = "Targeted rule mining and measure comparison")]
pub struct Cli {
    /// Worker threads for mining, scoring and comparison (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic retail corpus.
    Synth(SynthArgs),
    /// Curate raw sales into one transaction per line plus a dictionary.
    Prepare(PrepareArgs),
    /// Mine closed itemsets per target and score the derived rules.
    MineScore(MineScoreArgs),
    /// Correlate measure rankings, cluster them and report groups.
    Compare(CompareArgs),
    /// Serve a scored table over HTTP.
    Serve(ServeArgs),
    /// Run synth/prepare/mine-score/compare from one manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Run a parsed command line on a pool with the requested worker count.
pub fn execute(cli: Cli) -> CliResult<()> {
    let Cli { workers, command } = cli;
    let serve_cmd = matches!(command, Command::Serve(_));
    let run = move || -> CliResult<()> {
        match command {
            Command::Synth(a) => synth(&a).map(|_| ()),
            Command::Prepare(a) => {
                let s = prepare(&a)?;
                println!("{s}");
                Ok(())
            }
            Command::MineScore(a) => {
                let rows = mine_score(&a)?;
                println!("rules: {rows}");
                Ok(())
            }
            Command::Compare(a) => {
                let s = compare(&a)?;
                println!("{s}");
                Ok(())
            }
            Command::Serve(a) => serve(&a),
            Command::Run { config } => run_manifest(&config).map(|_| ()),
        }
    };
    match workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) if !serve_cmd => with_workers(n, run),
        _ => run(),
    }
}

/// Run `f` on a dedicated rayon pool of `n` threads.
pub fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
        .install(f)
}
