use std::collections::hash_map::RandomState;
use std::collections::BTreeMap;
use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

use crate::graph::{canonicalize_address, Chain, Transaction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    /// Worth retrying: timeouts, throttling, 5xx.
    #[error("provider unavailable: {0}")]
    Transient(String),
    /// Retrying cannot help: missing block, malformed payload.
    #[error("provider error: {0}")]
    Permanent(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("interrupted")]
    Interrupted,
}

/// Read access to one ledger. Implementations must be deterministic: a given
/// height always yields the same header and transactions.
pub trait BlockProvider: Send + Sync {
    fn chain(&self) -> Chain;
    fn latest_height(&self) -> Result<u64, ProviderError>;
    /// Lowest height the provider can serve.
    fn earliest_height(&self) -> u64 {
        0
    }
    /// Unix timestamp of the block at `height`.
    fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError>;
    /// Transactions of the block in their on-chain order.
    fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError>;
}

impl<P: BlockProvider + ?Sized> BlockProvider for &P {
    fn chain(&self) -> Chain {
        (**self).chain()
    }
    fn latest_height(&self) -> Result<u64, ProviderError> {
        (**self).latest_height()
    }
    fn earliest_height(&self) -> u64 {
        (**self).earliest_height()
    }
    fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
        (**self).block_timestamp(height)
    }
    fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
        (**self).block_transactions(height)
    }
}

impl<P: BlockProvider + ?Sized> BlockProvider for Box<P> {
    fn chain(&self) -> Chain {
        (**self).chain()
    }
    fn latest_height(&self) -> Result<u64, ProviderError> {
        (**self).latest_height()
    }
    fn earliest_height(&self) -> u64 {
        (**self).earliest_height()
    }
    fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
        (**self).block_timestamp(height)
    }
    fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
        (**self).block_transactions(height)
    }
}

/// Exponential backoff: `base * 2^(attempt-1)` capped at `max_delay`, scaled
/// by a random factor in `[0.5, 1]` when `jitter` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub max_delay: Duration,
    /// `None` retries until the request succeeds.
    pub max_attempts: Option<u32>,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(30),
            max_attempts: None,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// No sleeping between attempts.
    pub fn immediate(max_attempts: Option<u32>) -> Self {
        RetryPolicy {
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
            max_attempts,
            jitter: false,
        }
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(30);
        let raw = self.base_delay.saturating_mul(1 << exp).min(self.max_delay);
        if self.jitter && !raw.is_zero() {
            raw.mul_f64(0.5 + 0.5 * unit_random())
        } else {
            raw
        }
    }
}

// Per-process random keys make a fresh hasher a cheap entropy source.
fn unit_random() -> f64 {
    let bits = RandomState::new().build_hasher().finish();
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Runs `op` until it succeeds, fails permanently, runs out of attempts, or
/// `stop` is raised while backing off.
pub fn retry<T, F>(policy: &RetryPolicy, stop: Option<&AtomicBool>, mut op: F) -> Result<T, ProviderError>
where
    F: FnMut() -> Result<T, ProviderError>,
{
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        let last = match op() {
            Ok(v) => return Ok(v),
            Err(ProviderError::Transient(msg)) => msg,
            Err(other) => return Err(other),
        };
        if policy.max_attempts.is_some_and(|cap| attempt >= cap) {
            return Err(ProviderError::Exhausted {
                attempts: attempt,
                last,
            });
        }
        if stop.is_some_and(|s| s.load(Ordering::SeqCst)) {
            return Err(ProviderError::Interrupted);
        }
        let delay = policy.delay(attempt);
        if !delay.is_zero() {
            log_retry(attempt, &last, delay);
            thread::sleep(delay);
        }
    }
}

fn log_retry(attempt: u32, reason: &str, delay: Duration) {
    eprintln!(
        "retry: attempt {attempt} failed ({reason}); next in {:.2}s",
        delay.as_secs_f64()
    );
}

pub fn fetch_block_transactions<P: BlockProvider + ?Sized>(
    provider: &P,
    height: u64,
    policy: &RetryPolicy,
) -> Result<Vec<Transaction>, ProviderError> {
    retry(policy, None, || provider.block_transactions(height))
}

/// Token bucket shared by every worker of a provider.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    /// `per_second <= 0` disables limiting. Burst size is one second of tokens.
    pub fn new(per_second: f64) -> Self {
        RateLimiter {
            per_second,
            state: Mutex::new((per_second.max(1.0), Instant::now())),
        }
    }

    pub fn acquire(&self) {
        if self.per_second <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens =
                    (*tokens + now.duration_since(*last).as_secs_f64() * self.per_second).min(self.per_second.max(1.0));
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / self.per_second)
            };
            thread::sleep(wait);
        }
    }
}

/// Wraps a provider so that every request first takes a token.
pub struct RateLimited<P> {
    inner: P,
    limiter: RateLimiter,
}

impl<P: BlockProvider> RateLimited<P> {
    pub fn new(inner: P, per_second: f64) -> Self {
        RateLimited {
            inner,
            limiter: RateLimiter::new(per_second),
        }
    }
}

impl<P: BlockProvider> BlockProvider for RateLimited<P> {
    fn chain(&self) -> Chain {
        self.inner.chain()
    }
    fn latest_height(&self) -> Result<u64, ProviderError> {
        self.limiter.acquire();
        self.inner.latest_height()
    }
    fn earliest_height(&self) -> u64 {
        self.inner.earliest_height()
    }
    fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
        self.limiter.acquire();
        self.inner.block_timestamp(height)
    }
    fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
        self.limiter.acquire();
        self.inner.block_transactions(height)
    }
}

#[derive(Debug, Deserialize)]
struct FixtureBlock {
    height: u64,
    timestamp: u64,
    #[serde(default)]
    transactions: Vec<FixtureTx>,
}

#[derive(Debug, Deserialize)]
struct FixtureTx {
    s: Option<String>,
    r: String,
    v: u128,
}

/// Offline provider over a directory of `block_<height>.json` files:
/// `{"height": h, "timestamp": t, "transactions": [{"s": sender|null, "r": recipient, "v": amount}]}`.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    chain: Chain,
    dir: PathBuf,
    heights: BTreeMap<u64, PathBuf>,
}

impl FixtureProvider {
    pub fn open(dir: &Path, chain: Chain) -> Result<Self, ProviderError> {
        let entries = fs::read_dir(dir)
            .map_err(|e| ProviderError::Permanent(format!("cannot read fixture dir {}: {e}", dir.display())))?;
        let mut heights = BTreeMap::new();
        for entry in entries {
            let entry = entry.map_err(|e| ProviderError::Permanent(e.to_string()))?;
            let name = entry.file_name();
            let Some(height) = name
                .to_str()
                .and_then(|n| n.strip_prefix("block_"))
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<u64>().ok())
            else {
                continue;
            };
            heights.insert(height, entry.path());
        }
        if heights.is_empty() {
            return Err(ProviderError::Permanent(format!(
                "no block_<height>.json files in {}",
                dir.display()
            )));
        }
        Ok(FixtureProvider {
            chain,
            dir: dir.to_path_buf(),
            heights,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn load(&self, height: u64) -> Result<FixtureBlock, ProviderError> {
        let path = self
            .heights
            .get(&height)
            .ok_or_else(|| ProviderError::Permanent(format!("no fixture block at height {height}")))?;
        let text =
            fs::read_to_string(path).map_err(|e| ProviderError::Transient(format!("{}: {e}", path.display())))?;
        let block: FixtureBlock =
            serde_json::from_str(&text).map_err(|e| ProviderError::Permanent(format!("{}: {e}", path.display())))?;
        if block.height != height {
            return Err(ProviderError::Permanent(format!(
                "{} declares height {}",
                path.display(),
                block.height
            )));
        }
        Ok(block)
    }
}

impl BlockProvider for FixtureProvider {
    fn chain(&self) -> Chain {
        self.chain
    }

    fn latest_height(&self) -> Result<u64, ProviderError> {
        Ok(*self.heights.keys().next_back().expect("non-empty by construction"))
    }

    fn earliest_height(&self) -> u64 {
        *self.heights.keys().next().expect("non-empty by construction")
    }

    fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
        self.load(height).map(|b| b.timestamp)
    }

    fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
        let block = self.load(height)?;
        let key = |raw: &str| {
            canonicalize_address(raw, self.chain).map_err(|e| ProviderError::Permanent(format!("block {height}: {e}")))
        };
        block
            .transactions
            .iter()
            .map(|tx| {
                Ok(Transaction {
                    sender: tx.s.as_deref().map(key).transpose()?,
                    recipient: key(&tx.r)?,
                    amount: tx.v,
                    block_height: height,
                    timestamp: block.timestamp,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl BlockProvider for Flaky {
        fn chain(&self) -> Chain {
            Chain::Bitcoin
        }
        fn latest_height(&self) -> Result<u64, ProviderError> {
            Ok(0)
        }
        fn block_timestamp(&self, _: u64) -> Result<u64, ProviderError> {
            Ok(0)
        }
        fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if n <= self.failures {
                return Err(ProviderError::Transient(format!("call {n}")));
            }
            Ok(vec![Transaction {
                sender: None,
                recipient: canonicalize_address("miner", Chain::Bitcoin).unwrap(),
                amount: 50,
                block_height: height,
                timestamp: 0,
            }])
        }
    }

    fn flaky(failures: u32) -> Flaky {
        Flaky {
            failures,
            calls: AtomicU32::new(0),
        }
    }

    #[test]
    fn retries_until_success() {
        let p = flaky(2);
        let txs = fetch_block_transactions(&p, 7, &RetryPolicy::immediate(None)).unwrap();
        assert_eq!(txs.len(), 1);
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn cap_is_enforced() {
        let p = flaky(u32::MAX);
        let err = fetch_block_transactions(&p, 7, &RetryPolicy::immediate(Some(5))).unwrap_err();
        assert!(matches!(err, ProviderError::Exhausted { attempts: 5, .. }));
        assert_eq!(p.calls.load(Ordering::SeqCst), 5);
    }

    #[test]
    fn healthy_first_attempt() {
        let p = flaky(0);
        fetch_block_transactions(&p, 7, &RetryPolicy::immediate(Some(1))).unwrap();
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn permanent_errors_are_not_retried() {
        let mut calls = 0;
        let err = retry(&RetryPolicy::immediate(None), None, || -> Result<(), _> {
            calls += 1;
            Err(ProviderError::Permanent("bad".into()))
        })
        .unwrap_err();
        assert_eq!(err, ProviderError::Permanent("bad".into()));
        assert_eq!(calls, 1);
    }

    #[test]
    fn stop_interrupts_backoff() {
        let stop = AtomicBool::new(true);
        let err = retry(&RetryPolicy::immediate(None), Some(&stop), || -> Result<(), _> {
            Err(ProviderError::Transient("down".into()))
        })
        .unwrap_err();
        assert_eq!(err, ProviderError::Interrupted);
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(350),
            max_attempts: None,
            jitter: false,
        };
        let delays: Vec<u128> = (1..=4).map(|a| p.delay(a).as_millis()).collect();
        assert_eq!(delays, vec![100, 200, 350, 350]);
        let jittered = RetryPolicy { jitter: true, ..p }.delay(2);
        assert!(jittered >= Duration::from_millis(100) && jittered <= Duration::from_millis(200));
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(50.0);
        let start = Instant::now();
        // 50 burst tokens, then 10 more at 50/s.
        for _ in 0..60 {
            limiter.acquire();
        }
        let elapsed = start.elapsed();
        assert!(elapsed >= Duration::from_millis(150), "{elapsed:?}");
        let unlimited = RateLimiter::new(0.0);
        for _ in 0..1000 {
            unlimited.acquire();
        }
    }
}
