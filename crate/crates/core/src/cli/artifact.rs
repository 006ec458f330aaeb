use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = concat!("chaingraph ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(path: &Path) -> io::Result<Self> {
        Ok(InputFile {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex(&hasher.finalize()))
}

/// One digest over several files, in the given order.
pub fn sha256_files(paths: &[PathBuf]) -> io::Result<String> {
    let mut all = Sha256::new();
    for path in paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        all.update(name.as_bytes());
        all.update([0]);
        all.update(sha256_file(path)?.as_bytes());
    }
    Ok(hex(&all.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Honors `SOURCE_DATE_EPOCH` so reruns can produce identical files.
pub fn generated_at() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// A report file: provenance fields followed by the payload's own fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub tool_version: String,
    pub generated_at: String,
    pub command: String,
    pub config: Value,
    pub inputs: BTreeMap<String, InputFile>,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Artifact<T> {
    pub fn new(command: &str, config: &impl Serialize, inputs: BTreeMap<String, InputFile>, body: T) -> Self {
        Artifact {
            tool_version: TOOL_VERSION.to_string(),
            generated_at: generated_at(),
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            inputs,
            body,
        }
    }

    /// Pretty JSON, written to a temp file and renamed into place.
    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        let mut file = File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    }
}

impl<T: DeserializeOwned> Artifact<T> {
    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// True when `path` holds an artifact made from the same config and inputs.
pub fn up_to_date(path: &Path, config: &impl Serialize, inputs: &BTreeMap<String, InputFile>) -> bool {
    let Ok(existing) = Artifact::<Value>::read(path) else {
        return false;
    };
    existing.config == serde_json::to_value(config).expect("config serializes") && &existing.inputs == inputs
}
