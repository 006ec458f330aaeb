//! Chunk files: `chunk_<first>_<last>.ndjson`, one transaction per line as
//! `{"h":height,"t":timestamp,"s":sender|null,"r":recipient,"v":amount}`,
//! in block order and then in-block order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::{canonicalize_address, Chain, Transaction};

use super::IngestError;

#[derive(Debug, Serialize, Deserialize)]
struct Record<S> {
    h: u64,
    t: u64,
    s: Option<S>,
    r: S,
    v: u128,
}

pub fn write_records<W: Write>(mut out: W, txs: &[Transaction]) -> std::io::Result<()> {
    for tx in txs {
        let record = Record {
            h: tx.block_height,
            t: tx.timestamp,
            s: tx.sender.as_ref().map(|k| k.as_str()),
            r: tx.recipient.as_str(),
            v: tx.amount,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkFile {
    pub first: u64,
    pub last: u64,
    pub path: PathBuf,
}

fn parse_chunk_name(name: &str) -> Option<(u64, u64)> {
    let (first, last) = name.strip_prefix("chunk_")?.strip_suffix(".ndjson")?.split_once('_')?;
    Some((first.parse().ok()?, last.parse().ok()?))
}

/// Completed chunk files in `dir`, ascending by first height. Temp files
/// left by an interrupted run are ignored.
pub fn list_chunks(dir: &Path) -> Result<Vec<ChunkFile>, IngestError> {
    let mut chunks = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))? {
        let entry = entry.map_err(|e| IngestError::io(dir, e))?;
        let name = entry.file_name();
        if let Some((first, last)) = name.to_str().and_then(parse_chunk_name) {
            chunks.push(ChunkFile {
                first,
                last,
                path: entry.path(),
            });
        }
    }
    chunks.sort_by_key(|c| c.first);
    Ok(chunks)
}

/// Reads every transaction of one chunk file.
pub fn read_chunk(path: &Path, chain: Chain) -> Result<Vec<Transaction>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut txs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IngestError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| IngestError::Chunk {
            path: path.to_path_buf(),
            line: i + 1,
            message: msg,
        };
        let record: Record<String> = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let key = |raw: &str| canonicalize_address(raw, chain).map_err(|e| bad(e.to_string()));
        txs.push(Transaction {
            sender: record.s.as_deref().map(key).transpose()?,
            recipient: key(&record.r)?,
            amount: record.v,
            block_height: record.h,
            timestamp: record.t,
        });
    }
    Ok(txs)
}

/// All transactions in `dir`, chunk by chunk in height order.
pub fn read_chunk_dir(dir: &Path, chain: Chain) -> Result<Vec<Transaction>, IngestError> {
    let mut all = Vec::new();
    for chunk in list_chunks(dir)? {
        all.extend(read_chunk(&chunk.path, chain)?);
    }
    Ok(all)
}
