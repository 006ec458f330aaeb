//! Remote block providers: an Ethereum JSON-RPC node (Infura or any other
//! endpoint speaking `eth_blockNumber` / `eth_getBlockByNumber`) and a
//! blockchain.info-style Bitcoin REST API.
//!
//! Payload parsing is kept separate from transport so it can be tested
//! against canned responses.

use serde_json::{json, Value};

use crate::graph::{canonicalize_address, AddressKey, Chain, Transaction};

use super::provider::ProviderError;
use super::utxo::expand_payment;

fn malformed(what: impl std::fmt::Display) -> ProviderError {
    ProviderError::Permanent(format!("malformed response: {what}"))
}

/// Parses a `0x`-prefixed hex quantity.
pub fn parse_quantity(raw: &str) -> Result<u128, ProviderError> {
    let digits = raw
        .strip_prefix("0x")
        .ok_or_else(|| malformed(format!("quantity {raw:?} lacks 0x prefix")))?;
    if digits.is_empty() {
        return Ok(0);
    }
    u128::from_str_radix(digits, 16).map_err(|_| malformed(format!("quantity {raw:?}")))
}

/// Unwraps a JSON-RPC 2.0 envelope. Server-side errors count as transient
/// (quota and rate-limit failures look like this) except malformed-request
/// codes.
pub fn rpc_result(envelope: Value) -> Result<Value, ProviderError> {
    if let Some(err) = envelope.get("error") {
        let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
        let message = err.get("message").and_then(Value::as_str).unwrap_or("unknown error");
        let text = format!("rpc error {code}: {message}");
        return Err(if (-32602..=-32600).contains(&code) {
            ProviderError::Permanent(text)
        } else {
            ProviderError::Transient(text)
        });
    }
    envelope
        .get("result")
        .cloned()
        .ok_or_else(|| malformed("envelope without result"))
}

/// Extracts the timestamp and value transfers of an `eth_getBlockByNumber`
/// result fetched with full transaction objects. Contract creations (no
/// `to`) are skipped: the created address is only known from the receipt.
pub fn parse_eth_block(block: &Value, height: u64) -> Result<(u64, Vec<Transaction>), ProviderError> {
    if block.is_null() {
        return Err(ProviderError::Permanent(format!("block {height} not found")));
    }
    let field = |v: &Value, name: &str| -> Result<u128, ProviderError> {
        v.get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(format!("block {height}: missing {name}")))
            .and_then(parse_quantity)
    };
    let declared = field(block, "number")?;
    if declared != u128::from(height) {
        return Err(malformed(format!("asked for block {height}, got {declared}")));
    }
    let timestamp = field(block, "timestamp")? as u64;
    let key =
        |raw: &str| canonicalize_address(raw, Chain::Ethereum).map_err(|e| malformed(format!("block {height}: {e}")));
    let mut txs = Vec::new();
    for tx in block
        .get("transactions")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
    {
        if tx.is_string() {
            return Err(malformed("block fetched without full transaction objects"));
        }
        let Some(to) = tx.get("to").and_then(Value::as_str) else {
            continue;
        };
        let from = tx
            .get("from")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(format!("block {height}: transaction without from")))?;
        txs.push(Transaction {
            sender: Some(key(from)?),
            recipient: key(to)?,
            amount: field(tx, "value")?,
            block_height: height,
            timestamp,
        });
    }
    Ok((timestamp, txs))
}

/// Picks the main-chain block out of a `/block-height/<h>?format=json`
/// payload and flattens its transactions into pairwise transfers.
pub fn parse_btc_block(payload: &Value, height: u64) -> Result<(u64, Vec<Transaction>), ProviderError> {
    let blocks = payload
        .get("blocks")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing blocks array"))?;
    let block = blocks
        .iter()
        .find(|b| b.get("main_chain").and_then(Value::as_bool).unwrap_or(true))
        .ok_or_else(|| ProviderError::Permanent(format!("no main-chain block at height {height}")))?;
    let timestamp = block
        .get("time")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed(format!("block {height}: missing time")))?;
    let key =
        |raw: &str| canonicalize_address(raw, Chain::Bitcoin).map_err(|e| malformed(format!("block {height}: {e}")));
    let mut out = Vec::new();
    for tx in block.get("tx").and_then(Value::as_array).into_iter().flatten() {
        let mut inputs: Vec<AddressKey> = Vec::new();
        for input in tx.get("inputs").and_then(Value::as_array).into_iter().flatten() {
            // Coinbase inputs have no prev_out; non-standard scripts no addr.
            if let Some(addr) = input.pointer("/prev_out/addr").and_then(Value::as_str) {
                inputs.push(key(addr)?);
            }
        }
        let mut outputs: Vec<(AddressKey, u128)> = Vec::new();
        for output in tx.get("out").and_then(Value::as_array).into_iter().flatten() {
            let Some(addr) = output.get("addr").and_then(Value::as_str) else {
                continue;
            };
            let value = output
                .get("value")
                .and_then(Value::as_u64)
                .ok_or_else(|| malformed(format!("block {height}: output without value")))?;
            outputs.push((key(addr)?, u128::from(value)));
        }
        out.extend(expand_payment(&inputs, &outputs, height, timestamp));
    }
    Ok((timestamp, out))
}

pub fn eth_request(method: &str, params: Value) -> Value {
    json!({"jsonrpc": "2.0", "id": 1, "method": method, "params": params})
}

#[cfg(feature = "net")]
pub use transport::{BitcoinRestProvider, EthereumRpcProvider};

#[cfg(feature = "net")]
mod transport {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::*;
    use crate::ingestion::provider::BlockProvider;

    fn agent() -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into()
    }

    fn classify(err: ureq::Error) -> ProviderError {
        match err {
            ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
                ProviderError::Transient(format!("http status {code}"))
            }
            ureq::Error::StatusCode(code) => ProviderError::Permanent(format!("http status {code}")),
            other => ProviderError::Transient(other.to_string()),
        }
    }

    /// Ethereum over JSON-RPC. A `{api_key}` placeholder in the endpoint is
    /// replaced by the key (Infura style); otherwise the key is sent as a
    /// bearer token.
    pub struct EthereumRpcProvider {
        agent: ureq::Agent,
        url: String,
        bearer: Option<String>,
    }

    impl EthereumRpcProvider {
        pub fn new(endpoint: &str, api_key: Option<&str>) -> Self {
            let (url, bearer) = match api_key {
                Some(key) if endpoint.contains("{api_key}") => (endpoint.replace("{api_key}", key), None),
                Some(key) => (endpoint.to_string(), Some(format!("Bearer {key}"))),
                None => (endpoint.to_string(), None),
            };
            EthereumRpcProvider {
                agent: agent(),
                url,
                bearer,
            }
        }

        fn call(&self, method: &str, params: Value) -> Result<Value, ProviderError> {
            let mut request = self.agent.post(&self.url).header("Content-Type", "application/json");
            if let Some(token) = &self.bearer {
                request = request.header("Authorization", token);
            }
            let mut response = request.send_json(eth_request(method, params)).map_err(classify)?;
            let envelope: Value = response.body_mut().read_json().map_err(classify)?;
            rpc_result(envelope)
        }

        fn block(&self, height: u64, full: bool) -> Result<Value, ProviderError> {
            self.call("eth_getBlockByNumber", json!([format!("0x{height:x}"), full]))
        }
    }

    impl BlockProvider for EthereumRpcProvider {
        fn chain(&self) -> Chain {
            Chain::Ethereum
        }

        fn latest_height(&self) -> Result<u64, ProviderError> {
            let result = self.call("eth_blockNumber", json!([]))?;
            let raw = result.as_str().ok_or_else(|| malformed("eth_blockNumber result"))?;
            Ok(parse_quantity(raw)? as u64)
        }

        fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
            let block = self.block(height, false)?;
            if block.is_null() {
                return Err(ProviderError::Permanent(format!("block {height} not found")));
            }
            let raw = block
                .get("timestamp")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("block without timestamp"))?;
            Ok(parse_quantity(raw)? as u64)
        }

        fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
            parse_eth_block(&self.block(height, true)?, height).map(|(_, txs)| txs)
        }
    }

    /// Bitcoin over a blockchain.info-compatible REST API
    /// (`/latestblock`, `/block-height/<h>?format=json`).
    pub struct BitcoinRestProvider {
        agent: ureq::Agent,
        base: String,
        api_key: Option<String>,
    }

    impl BitcoinRestProvider {
        pub fn new(base: &str, api_key: Option<&str>) -> Self {
            BitcoinRestProvider {
                agent: agent(),
                base: base.trim_end_matches('/').to_string(),
                api_key: api_key.map(str::to_string),
            }
        }

        fn get(&self, path: &str) -> Result<Value, ProviderError> {
            let mut url = format!("{}{}", self.base, path);
            if let Some(key) = &self.api_key {
                url.push_str(if url.contains('?') { "&api_code=" } else { "?api_code=" });
                url.push_str(key);
            }
            let mut response = self.agent.get(&url).call().map_err(classify)?;
            response.body_mut().read_json().map_err(classify)
        }
    }

    impl BlockProvider for BitcoinRestProvider {
        fn chain(&self) -> Chain {
            Chain::Bitcoin
        }

        fn latest_height(&self) -> Result<u64, ProviderError> {
            self.get("/latestblock")?
                .get("height")
                .and_then(Value::as_u64)
                .ok_or_else(|| malformed("latestblock without height"))
        }

        fn block_timestamp(&self, height: u64) -> Result<u64, ProviderError> {
            parse_btc_block(&self.get(&format!("/block-height/{height}?format=json"))?, height).map(|(t, _)| t)
        }

        fn block_transactions(&self, height: u64) -> Result<Vec<Transaction>, ProviderError> {
            parse_btc_block(&self.get(&format!("/block-height/{height}?format=json"))?, height).map(|(_, txs)| txs)
        }
    }
}
