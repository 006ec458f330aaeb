//! The `chaingraph` command line: `download`, `build`, `analyze`, `compare`
//! and `report`, each reading the previous step's outputs from one output
//! directory.
//!
//! Settings come from flags, then `CHAINGRAPH_*` environment variables, then
//! a TOML file given with `--config`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod artifact;
mod commands;
mod config;

pub use artifact::{sha256_file, Artifact, InputFile};
pub use config::{
    AnalyzeConfig, BuildConfig, CompareConfig, DownloadConfig, FileConfig, OutputFormat, ProviderSource, RangeSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "chaingraph",
    version,
    about = "Ledger transaction graphs and small-world analysis"
)]
pub struct Cli {
    /// TOML file with default settings
    #[arg(long, global = true, env = "CHAINGRAPH_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for chunks, graphs and reports [default: .]
    #[arg(long, global = true, env = "CHAINGRAPH_OUTPUT_DIR", value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads [default: logical cores]
    #[arg(long, global = true, env = "CHAINGRAPH_WORKERS", value_name = "N")]
    pub workers: Option<usize>,
    /// Redo a step even when its outputs are up to date
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch blocks into resumable chunk files
    Download(DownloadArgs),
    /// Build graph files from downloaded chunks
    Build(BuildArgs),
    /// Compute metrics of a graph into metrics.json
    Analyze(AnalyzeArgs),
    /// Compare a graph with random baselines into comparison.json
    Compare(CompareArgs),
    /// Print a summary of existing reports
    Report,
}

#[derive(Debug, Args, Default)]
pub struct DownloadArgs {
    /// bitcoin | ethereum
    #[arg(long, env = "CHAINGRAPH_CHAIN")]
    pub chain: Option<String>,
    /// Read blocks from a directory of block_<height>.json files
    #[arg(long, env = "CHAINGRAPH_FIXTURE", value_name = "DIR")]
    pub fixture: Option<PathBuf>,
    /// Provider URL (JSON-RPC for ethereum, REST for bitcoin)
    #[arg(long, env = "CHAINGRAPH_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, env = "CHAINGRAPH_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
    /// Provider requests per second [default: 10 for endpoints]
    #[arg(long, env = "CHAINGRAPH_RATE_LIMIT")]
    pub rate_limit: Option<f64>,
    /// Give up on a block after this many attempts [default: never]
    #[arg(long, env = "CHAINGRAPH_RETRY_CAP")]
    pub retry_cap: Option<u32>,
    /// First retry delay in milliseconds [default: 250]
    #[arg(long, env = "CHAINGRAPH_BACKOFF_MS")]
    pub backoff_ms: Option<u64>,
    #[arg(long, env = "CHAINGRAPH_FROM_BLOCK")]
    pub from_block: Option<u64>,
    #[arg(long, env = "CHAINGRAPH_TO_BLOCK")]
    pub to_block: Option<u64>,
    /// Unix seconds or RFC 3339
    #[arg(long, env = "CHAINGRAPH_FROM_TIME", value_parser = config::parse_time)]
    pub from_time: Option<u64>,
    /// Unix seconds or RFC 3339, inclusive
    #[arg(long, env = "CHAINGRAPH_TO_TIME", value_parser = config::parse_time)]
    pub to_time: Option<u64>,
    /// Blocks per chunk file [default: 100]
    #[arg(long, env = "CHAINGRAPH_CHUNK_SIZE")]
    pub chunk_size: Option<u64>,
    /// Linear scan window around time boundaries [default: 128]
    #[arg(long, env = "CHAINGRAPH_SLACK")]
    pub slack: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct BuildArgs {
    /// Chunk directory [default: <output-dir>/chunks]
    #[arg(long, env = "CHAINGRAPH_CHUNK_DIR", value_name = "DIR")]
    pub chunk_dir: Option<PathBuf>,
    /// json | pajek | both [default: both]
    #[arg(long, env = "CHAINGRAPH_FORMAT")]
    pub format: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct AnalyzeArgs {
    /// Graph file, .json or .pajek/.net [default: the graph in <output-dir>]
    #[arg(long, env = "CHAINGRAPH_GRAPH", value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Chunks to restore directed transaction counts from
    #[arg(long, env = "CHAINGRAPH_CHUNK_DIR", value_name = "DIR")]
    pub chunk_dir: Option<PathBuf>,
    /// Estimate ASPL from k random BFS sources instead of all
    #[arg(long, env = "CHAINGRAPH_SAMPLE_SOURCES", value_name = "K")]
    pub sample_sources: Option<usize>,
    /// Seed for random baselines and ASPL source sampling [default: 0]
    #[arg(long, env = "CHAINGRAPH_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct CompareArgs {
    #[command(flatten)]
    pub analyze: AnalyzeArgs,
    /// Random baseline graphs to draw [default: 1]
    #[arg(long, env = "CHAINGRAPH_SAMPLES")]
    pub samples: Option<usize>,
    /// Minimum clustering ratio [default: 10]
    #[arg(long, env = "CHAINGRAPH_ACC_THRESHOLD")]
    pub acc_threshold: Option<f64>,
    /// Maximum path length ratio [default: 1.1]
    #[arg(long, env = "CHAINGRAPH_ASPL_THRESHOLD")]
    pub aspl_threshold: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 usage error, 2 runtime error.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\nFor more information, try '--help'.");
            }
            e.exit_code()
        }
    }
}
