use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};

use super::chunk::write_records;
use super::plan::{Checkpoint, DownloadTask, TaskState};
use super::provider::{retry, BlockProvider, ProviderError, RetryPolicy};
use super::IngestError;

#[derive(Debug, Clone)]
pub struct DownloadOptions {
    pub workers: usize,
    pub retry: RetryPolicy,
    /// Raised to request a graceful stop: in-flight chunks finish, no new
    /// chunk starts.
    pub stop: Arc<AtomicBool>,
}

impl Default for DownloadOptions {
    fn default() -> Self {
        DownloadOptions {
            workers: 1,
            retry: RetryPolicy::default(),
            stop: Arc::new(AtomicBool::new(false)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownloadSummary {
    pub blocks_fetched: u64,
    pub transactions_written: u64,
    pub chunks_completed: u64,
    /// Planned chunks not completed in this run.
    pub chunks_remaining: u64,
    pub interrupted: bool,
}

enum Outcome {
    Done {
        task: DownloadTask,
        temp: PathBuf,
        blocks: u64,
        transactions: u64,
    },
    Failed {
        task: DownloadTask,
        error: IngestError,
    },
}

/// Fetches `tasks` with a pool of `options.workers` threads.
///
/// Workers pull chunks from a shared queue, write each to a private temp
/// file, and report back. This thread renames finished files into place and
/// rewrites the checkpoint after every chunk, so the checkpoint only ever
/// lists chunks whose files are complete.
pub fn run_download<P: BlockProvider + ?Sized>(
    tasks: Vec<DownloadTask>,
    provider: &P,
    checkpoint: &mut Checkpoint,
    chunk_dir: &Path,
    checkpoint_path: &Path,
    options: &DownloadOptions,
) -> Result<DownloadSummary, IngestError> {
    let mut summary = DownloadSummary {
        chunks_remaining: tasks.len() as u64,
        ..DownloadSummary::default()
    };
    if tasks.is_empty() {
        return Ok(summary);
    }
    if provider.chain() != checkpoint.chain {
        return Err(IngestError::Checkpoint(format!(
            "provider serves {}, checkpoint is for {}",
            provider.chain(),
            checkpoint.chain
        )));
    }
    fs::create_dir_all(chunk_dir).map_err(|e| IngestError::io(chunk_dir, e))?;

    let queue = Mutex::new(tasks.into_iter().collect::<VecDeque<_>>());
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Outcome>();
    let workers = options.workers.max(1);
    let mut first_error = None;

    thread::scope(|scope| {
        for worker in 0..workers {
            let tx = tx.clone();
            let (queue, abort) = (&queue, &abort);
            scope.spawn(move || loop {
                if abort.load(Ordering::SeqCst) || options.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Some(mut task) = queue.lock().expect("task queue poisoned").pop_front() else {
                    break;
                };
                task.state = TaskState::InFlight;
                task.attempt_count += 1;
                let outcome = fetch_chunk(provider, &task, chunk_dir, worker, options);
                let failed = matches!(outcome, Outcome::Failed { .. });
                if tx.send(outcome).is_err() || failed {
                    break;
                }
            });
        }
        drop(tx);

        for outcome in rx {
            match outcome {
                Outcome::Done {
                    task,
                    temp,
                    blocks,
                    transactions,
                } => {
                    let target = chunk_dir.join(task.file_name());
                    let committed = fs::rename(&temp, &target)
                        .map_err(|e| IngestError::io(&target, e))
                        .and_then(|()| {
                            checkpoint.done.insert(task.first);
                            checkpoint.save(checkpoint_path)
                        });
                    match committed {
                        Ok(()) => {
                            summary.blocks_fetched += blocks;
                            summary.transactions_written += transactions;
                            summary.chunks_completed += 1;
                            summary.chunks_remaining -= 1;
                        }
                        Err(e) => {
                            checkpoint.done.remove(&task.first);
                            let _ = fs::remove_file(&temp);
                            abort.store(true, Ordering::SeqCst);
                            first_error.get_or_insert(e);
                        }
                    }
                }
                Outcome::Failed { task, error } => {
                    if !matches!(error, IngestError::Provider(ProviderError::Interrupted)) {
                        eprintln!("chunk {}..={} failed: {error}", task.first, task.last);
                        abort.store(true, Ordering::SeqCst);
                        first_error.get_or_insert(error);
                    }
                }
            }
        }
    });

    if let Some(e) = first_error {
        return Err(e);
    }
    summary.interrupted = summary.chunks_remaining > 0;
    Ok(summary)
}

fn fetch_chunk<P: BlockProvider + ?Sized>(
    provider: &P,
    task: &DownloadTask,
    chunk_dir: &Path,
    worker: usize,
    options: &DownloadOptions,
) -> Outcome {
    let temp = chunk_dir.join(format!(".{}.tmp-{worker}", task.file_name()));
    let result = (|| -> Result<(u64, u64), IngestError> {
        let file = File::create(&temp).map_err(|e| IngestError::io(&temp, e))?;
        let mut out = BufWriter::new(file);
        let mut transactions = 0u64;
        for height in task.heights() {
            let txs = retry(&options.retry, Some(&options.stop), || {
                provider.block_transactions(height)
            })?;
            write_records(&mut out, &txs).map_err(|e| IngestError::io(&temp, e))?;
            transactions += txs.len() as u64;
        }
        out.flush().map_err(|e| IngestError::io(&temp, e))?;
        out.get_ref().sync_all().map_err(|e| IngestError::io(&temp, e))?;
        Ok((task.last - task.first + 1, transactions))
    })();
    match result {
        Ok((blocks, transactions)) => Outcome::Done {
            task: task.clone(),
            temp,
            blocks,
            transactions,
        },
        Err(error) => {
            let _ = fs::remove_file(&temp);
            Outcome::Failed {
                task: task.clone(),
                error,
            }
        }
    }
}
