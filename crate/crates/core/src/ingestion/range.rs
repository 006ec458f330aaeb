use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::provider::{retry, BlockProvider, ProviderError, RetryPolicy};
use super::IngestError;

/// Inclusive span of unix seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeInterval {
    start: u64,
    end: u64,
}

impl TimeInterval {
    pub fn new(start: u64, end: u64) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::InvalidInterval { start, end });
        }
        Ok(TimeInterval { start, end })
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.end
    }
}

/// Inclusive span of block heights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockRange {
    first: u64,
    last: u64,
}

impl BlockRange {
    pub fn new(first: u64, last: u64) -> Result<Self, IngestError> {
        if first > last {
            return Err(IngestError::InvalidRange { first, last });
        }
        Ok(BlockRange { first, last })
    }

    pub fn first(&self) -> u64 {
        self.first
    }

    pub fn last(&self) -> u64 {
        self.last
    }

    pub fn block_count(&self) -> u64 {
        self.last - self.first + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolveOptions {
    /// Blocks scanned linearly on each side of a binary-search boundary, to
    /// absorb small timestamp inversions.
    pub slack: u64,
    pub retry: RetryPolicy,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions {
            slack: 128,
            retry: RetryPolicy::default(),
        }
    }
}

struct Headers<'a, P: ?Sized> {
    provider: &'a P,
    retry: RetryPolicy,
    cache: HashMap<u64, u64>,
}

impl<P: BlockProvider + ?Sized> Headers<'_, P> {
    fn timestamp(&mut self, height: u64) -> Result<u64, ProviderError> {
        if let Some(&t) = self.cache.get(&height) {
            return Ok(t);
        }
        let t = retry(&self.retry, None, || self.provider.block_timestamp(height))?;
        self.cache.insert(height, t);
        Ok(t)
    }

    /// Smallest height in `lo..=hi+1` whose predicate holds, assuming the
    /// predicate is monotone (false..false true..true); `hi + 1` if none.
    fn partition_point<F>(&mut self, mut lo: u64, hi: u64, pred: F) -> Result<u64, ProviderError>
    where
        F: Fn(u64) -> bool,
    {
        let mut hi = hi + 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(self.timestamp(mid)?) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

/// Finds the blocks whose timestamps fall in `interval`: the first block at
/// or after `start` and the last block at or before `end`.
pub fn resolve_block_range<P: BlockProvider + ?Sized>(
    interval: TimeInterval,
    provider: &P,
    options: &ResolveOptions,
) -> Result<BlockRange, IngestError> {
    let tip = retry(&options.retry, None, || provider.latest_height())?;
    let base = provider.earliest_height().min(tip);
    let mut headers = Headers {
        provider,
        retry: options.retry,
        cache: HashMap::new(),
    };
    let slack = options.slack;

    let first_guess = headers.partition_point(base, tip, |t| t >= interval.start())?;
    let mut first = None;
    for h in first_guess.saturating_sub(slack).max(base)..=first_guess.saturating_add(slack).min(tip) {
        if headers.timestamp(h)? >= interval.start() {
            first = Some(h);
            break;
        }
    }

    let after_end = headers.partition_point(base, tip, |t| t > interval.end())?;
    let last_guess = after_end.checked_sub(1);
    let mut last = None;
    let scan_from = last_guess.map_or(base, |g| g.saturating_sub(slack).max(base));
    let scan_to = last_guess.map_or(base.saturating_add(slack).min(tip), |g| {
        g.saturating_add(slack).min(tip)
    });
    for h in (scan_from..=scan_to).rev() {
        if headers.timestamp(h)? <= interval.end() {
            last = Some(h);
            break;
        }
    }

    match (first, last) {
        (Some(f), Some(l)) if f <= l => Ok(BlockRange { first: f, last: l }),
        _ => Err(IngestError::EmptyRange {
            start: interval.start(),
            end: interval.end(),
        }),
    }
}
