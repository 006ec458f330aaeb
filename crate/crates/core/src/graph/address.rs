use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ledger a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Bitcoin,
    Ethereum,
}

impl Chain {
    pub fn as_str(self) -> &'static str {
        match self {
            Chain::Bitcoin => "bitcoin",
            Chain::Ethereum => "ethereum",
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Chain {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bitcoin" | "btc" => Ok(Chain::Bitcoin),
            "ethereum" | "eth" => Ok(Chain::Ethereum),
            other => Err(AddressError::UnknownChain(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("empty address")]
    Empty,
    #[error("malformed ethereum address {0:?}: expected 0x followed by 40 hex digits")]
    MalformedHex(String),
    #[error("malformed bitcoin address {0:?}: must not contain whitespace or quotes")]
    MalformedBitcoin(String),
    #[error("unknown chain {0:?}")]
    UnknownChain(String),
}

/// Canonical account identifier. One key maps to exactly one graph node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AddressKey {
    chain: Chain,
    key: String,
}

impl AddressKey {
    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn as_str(&self) -> &str {
        &self.key
    }

    pub fn into_string(self) -> String {
        self.key
    }
}

impl fmt::Display for AddressKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// Normalizes a raw address so that every spelling of one account yields the
/// same key.
///
/// Ethereum addresses are lowercased and must be `0x` plus 40 hex digits (the
/// prefix may be missing or upper-case on input). Bitcoin addresses are
/// trimmed and otherwise kept verbatim.
pub fn canonicalize_address(raw: &str, chain: Chain) -> Result<AddressKey, AddressError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(AddressError::Empty);
    }
    let key = match chain {
        Chain::Ethereum => {
            let digits = trimmed
                .strip_prefix("0x")
                .or_else(|| trimmed.strip_prefix("0X"))
                .unwrap_or(trimmed);
            if digits.len() != 40 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(AddressError::MalformedHex(raw.to_string()));
            }
            format!("0x{}", digits.to_ascii_lowercase())
        }
        Chain::Bitcoin => {
            if trimmed.chars().any(|c| c.is_whitespace() || c == '"') {
                return Err(AddressError::MalformedBitcoin(raw.to_string()));
            }
            trimmed.to_string()
        }
    };
    Ok(AddressKey { chain, key })
}

/// True when `key` has the shape of a canonical ethereum address.
pub fn looks_like_ethereum(key: &str) -> bool {
    key.len() == 42 && key.starts_with("0x") && key[2..].bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
