//! Block download: range resolution, chunked resumable fetching, and chunk
//! files on disk.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

mod chunk;
mod download;
mod plan;
mod provider;
mod range;
pub mod rpc;
mod utxo;

pub use chunk::{list_chunks, read_chunk, read_chunk_dir, write_records, ChunkFile};
pub use download::{run_download, DownloadOptions, DownloadSummary};
pub use plan::{
    chunk_file_name, plan_tasks, Checkpoint, DownloadTask, TaskState, CHECKPOINT_VERSION, DEFAULT_CHUNK_SIZE,
};
pub use provider::{
    fetch_block_transactions, retry, BlockProvider, FixtureProvider, ProviderError, RateLimited, RateLimiter,
    RetryPolicy,
};
pub use range::{resolve_block_range, BlockRange, ResolveOptions, TimeInterval};
pub use utxo::expand_payment;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid time interval: start {start} is after end {end}")]
    InvalidInterval { start: u64, end: u64 },
    #[error("invalid block range: first {first} is after last {last}")]
    InvalidRange { first: u64, last: u64 },
    #[error("no blocks with timestamps in [{start}, {end}]")]
    EmptyRange { start: u64, end: u64 },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Chunk {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Downloads `range` into `chunk_dir`, resuming from the checkpoint there
/// when one exists for the same job.
pub fn download<P: BlockProvider + ?Sized>(
    provider: &P,
    range: BlockRange,
    chunk_size: u64,
    chunk_dir: &Path,
    options: &DownloadOptions,
) -> Result<(Checkpoint, DownloadSummary), IngestError> {
    let checkpoint_path = chunk_dir.join(CHECKPOINT_FILE);
    let existing = Checkpoint::load_optional(&checkpoint_path)?;
    let tasks = plan_tasks(provider.chain(), range, chunk_size, existing.as_ref())?;
    let mut checkpoint = existing.unwrap_or_else(|| Checkpoint::new(provider.chain(), range, chunk_size));
    std::fs::create_dir_all(chunk_dir).map_err(|e| IngestError::io(chunk_dir, e))?;
    if !checkpoint_path.exists() {
        checkpoint.save(&checkpoint_path)?;
    }
    let summary = run_download(tasks, provider, &mut checkpoint, chunk_dir, &checkpoint_path, options)?;
    Ok((checkpoint, summary))
}
