use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::Chain;

use super::range::BlockRange;
use super::IngestError;

pub const CHECKPOINT_VERSION: u32 = 1;
pub const DEFAULT_CHUNK_SIZE: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Pending,
    InFlight,
    Done,
    Failed,
}

/// A contiguous span of blocks fetched and written as one chunk file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownloadTask {
    pub first: u64,
    pub last: u64,
    pub attempt_count: u32,
    pub state: TaskState,
}

impl DownloadTask {
    pub fn new(first: u64, last: u64) -> Self {
        DownloadTask {
            first,
            last,
            attempt_count: 0,
            state: TaskState::Pending,
        }
    }

    pub fn heights(&self) -> std::ops::RangeInclusive<u64> {
        self.first..=self.last
    }

    pub fn file_name(&self) -> String {
        chunk_file_name(self.first, self.last)
    }
}

pub fn chunk_file_name(first: u64, last: u64) -> String {
    format!("chunk_{first}_{last}.ndjson")
}

/// Durable download progress, rewritten after every completed chunk.
///
/// On disk: `{"version":1,"chain":…,"first":…,"last":…,"chunk_size":…,"done":[…]}`
/// with `done` holding the first height of each finished chunk, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub chain: Chain,
    pub first: u64,
    pub last: u64,
    pub chunk_size: u64,
    pub done: BTreeSet<u64>,
}

impl Checkpoint {
    pub fn new(chain: Chain, range: BlockRange, chunk_size: u64) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            chain,
            first: range.first(),
            last: range.last(),
            chunk_size,
            done: BTreeSet::new(),
        }
    }

    pub fn range(&self) -> BlockRange {
        BlockRange::new(self.first, self.last).expect("validated on load")
    }

    /// First heights of every chunk of the job.
    pub fn planned(&self) -> impl Iterator<Item = u64> + '_ {
        (self.first..=self.last).step_by(self.chunk_size.max(1) as usize)
    }

    pub fn is_complete(&self) -> bool {
        self.planned().all(|h| self.done.contains(&h))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        let cp: Checkpoint =
            serde_json::from_str(&text).map_err(|e| IngestError::Checkpoint(format!("{}: {e}", path.display())))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(IngestError::Checkpoint(format!(
                "{}: unsupported version {}",
                path.display(),
                cp.version
            )));
        }
        if cp.first > cp.last || cp.chunk_size == 0 {
            return Err(IngestError::Checkpoint(format!(
                "{}: invalid range or chunk size",
                path.display()
            )));
        }
        let planned: BTreeSet<u64> = cp.planned().collect();
        if let Some(stray) = cp.done.iter().find(|h| !planned.contains(h)) {
            return Err(IngestError::Checkpoint(format!(
                "{}: done chunk {stray} is not part of the plan",
                path.display()
            )));
        }
        Ok(cp)
    }

    /// Loads `path` if it exists.
    pub fn load_optional(path: &Path) -> Result<Option<Self>, IngestError> {
        match path.try_exists() {
            Ok(true) => Self::load(path).map(Some),
            Ok(false) => Ok(None),
            Err(e) => Err(IngestError::io(path, e)),
        }
    }

    /// Atomic replace: write a sibling temp file, sync it, rename over `path`.
    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let tmp = path.with_extension("json.tmp");
        let write = || -> std::io::Result<()> {
            let mut file = fs::File::create(&tmp)?;
            serde_json::to_writer(&mut file, self)?;
            file.write_all(b"\n")?;
            file.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| IngestError::io(path, e))
    }
}

/// Splits `range` into chunks of `chunk_size` blocks and drops those the
/// checkpoint already records as done. Tasks come out in ascending order.
pub fn plan_tasks(
    chain: Chain,
    range: BlockRange,
    chunk_size: u64,
    checkpoint: Option<&Checkpoint>,
) -> Result<Vec<DownloadTask>, IngestError> {
    if chunk_size == 0 {
        return Err(IngestError::Checkpoint("chunk size must be at least 1".into()));
    }
    if let Some(cp) = checkpoint {
        if cp.chain != chain || cp.first != range.first() || cp.last != range.last() || cp.chunk_size != chunk_size {
            return Err(IngestError::Checkpoint(format!(
                "checkpoint is for {} blocks {}..={} in chunks of {}, not {} blocks {}..={} in chunks of {}",
                cp.chain,
                cp.first,
                cp.last,
                cp.chunk_size,
                chain,
                range.first(),
                range.last(),
                chunk_size
            )));
        }
    }
    let mut tasks = Vec::new();
    let mut first = range.first();
    loop {
        let last = first.saturating_add(chunk_size - 1).min(range.last());
        if !checkpoint.is_some_and(|cp| cp.done.contains(&first)) {
            tasks.push(DownloadTask::new(first, last));
        }
        if last == range.last() {
            break;
        }
        first = last + 1;
    }
    Ok(tasks)
}
