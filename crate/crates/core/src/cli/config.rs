use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::baseline::{DEFAULT_ACC_THRESHOLD, DEFAULT_ASPL_THRESHOLD};
use crate::graph::{Chain, GraphFormat};
use crate::ingestion::{ResolveOptions, DEFAULT_CHUNK_SIZE};
use crate::metrics::AsplMode;

use super::{AnalyzeArgs, BuildArgs, Cli, CliError, CompareArgs, DownloadArgs};

pub const DEFAULT_RATE_LIMIT: f64 = 10.0;
pub const DEFAULT_BACKOFF_MS: u64 = 250;

/// Accepts unix seconds or an RFC 3339 timestamp.
pub fn parse_time(raw: &str) -> Result<u64, String> {
    if let Ok(secs) = raw.parse::<u64>() {
        return Ok(secs);
    }
    let dt =
        DateTime::parse_from_rfc3339(raw).map_err(|e| format!("{raw:?} is neither unix seconds nor RFC 3339: {e}"))?;
    u64::try_from(dt.timestamp()).map_err(|_| format!("{raw:?} is before 1970"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Unix(u64),
    Text(String),
}

impl TimeValue {
    fn resolve(&self) -> Result<u64, CliError> {
        match self {
            TimeValue::Unix(t) => Ok(*t),
            TimeValue::Text(s) => parse_time(s).map_err(CliError::Usage),
        }
    }
}

/// Contents of a `--config` file: a flat table whose keys are the long flag
/// names with `_` for `-`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub chain: Option<String>,
    pub fixture: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub rate_limit: Option<f64>,
    pub retry_cap: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub from_block: Option<u64>,
    pub to_block: Option<u64>,
    pub from_time: Option<TimeValue>,
    pub to_time: Option<TimeValue>,
    pub chunk_size: Option<u64>,
    pub slack: Option<u64>,
    pub chunk_dir: Option<PathBuf>,
    pub format: Option<String>,
    pub graph: Option<PathBuf>,
    pub sample_sources: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub acc_threshold: Option<f64>,
    pub aspl_threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Settings every subcommand shares.
#[derive(Debug, Clone)]
pub struct Common {
    pub output_dir: PathBuf,
    pub workers: usize,
    pub force: bool,
}

impl Common {
    pub fn resolve(cli: &Cli, file: &FileConfig) -> Result<Self, CliError> {
        let workers = cli
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(Common {
            output_dir: cli
                .output_dir
                .clone()
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| ".".into()),
            workers,
            force: cli.force,
        })
    }

    pub fn chunk_dir(&self) -> PathBuf {
        self.output_dir.join("chunks")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderSource {
    Fixture(PathBuf),
    Endpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RangeSpec {
    Blocks { first: u64, last: u64 },
    Time { start: u64, end: u64 },
}

/// Effective download settings. The API key is never echoed.
#[derive(Debug, Clone, Serialize)]
pub struct DownloadConfig {
    pub chain: Chain,
    pub source: ProviderSource,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub rate_limit: Option<f64>,
    pub retry_cap: Option<u32>,
    pub backoff_ms: u64,
    pub range: RangeSpec,
    pub chunk_size: u64,
    pub slack: u64,
    pub workers: usize,
    pub chunk_dir: PathBuf,
}

fn parse_chain(raw: &str) -> Result<Chain, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("unknown chain {raw:?}; expected bitcoin or ethereum")))
}

impl DownloadConfig {
    pub fn resolve(args: &DownloadArgs, file: &FileConfig, common: &Common) -> Result<Self, CliError> {
        let chain = args
            .chain
            .as_deref()
            .or(file.chain.as_deref())
            .ok_or_else(|| CliError::Usage("--chain is required".into()))
            .and_then(parse_chain)?;

        let source = match (args.fixture.clone(), args.endpoint.clone()) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --fixture or --endpoint, not both".into())),
            (Some(dir), None) => ProviderSource::Fixture(dir),
            (None, Some(url)) => ProviderSource::Endpoint(url),
            (None, None) => match (file.fixture.clone(), file.endpoint.clone()) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage("config sets both fixture and endpoint".into()));
                }
                (Some(dir), None) => ProviderSource::Fixture(dir),
                (None, Some(url)) => ProviderSource::Endpoint(url),
                (None, None) => {
                    return Err(CliError::Usage(
                        "a provider is required: --fixture or --endpoint".into(),
                    ))
                }
            },
        };

        let from_time = match args.from_time {
            Some(t) => Some(t),
            None => file.from_time.as_ref().map(TimeValue::resolve).transpose()?,
        };
        let to_time = match args.to_time {
            Some(t) => Some(t),
            None => file.to_time.as_ref().map(TimeValue::resolve).transpose()?,
        };
        let blocks = (args.from_block.or(file.from_block), args.to_block.or(file.to_block));
        let range = match (blocks, (from_time, to_time)) {
            ((Some(first), Some(last)), (None, None)) => {
                if first > last {
                    return Err(CliError::Usage(format!(
                        "--from-block {first} is after --to-block {last}"
                    )));
                }
                RangeSpec::Blocks { first, last }
            }
            ((None, None), (Some(start), Some(end))) => {
                if start > end {
                    return Err(CliError::Usage(format!("--from-time {start} is after --to-time {end}")));
                }
                RangeSpec::Time { start, end }
            }
            _ => {
                return Err(CliError::Usage(
                    "give exactly one of --from-block/--to-block or --from-time/--to-time".into(),
                ))
            }
        };

        let chunk_size = args.chunk_size.or(file.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE);
        if chunk_size == 0 {
            return Err(CliError::Usage("--chunk-size must be at least 1".into()));
        }
        let rate_limit = match args.rate_limit.or(file.rate_limit) {
            Some(r) if !(r > 0.0 && r.is_finite()) => {
                return Err(CliError::Usage("--rate-limit must be a positive number".into()));
            }
            Some(r) => Some(r),
            None if matches!(source, ProviderSource::Endpoint(_)) => Some(DEFAULT_RATE_LIMIT),
            None => None,
        };
        let retry_cap = args.retry_cap.or(file.retry_cap);
        if retry_cap == Some(0) {
            return Err(CliError::Usage("--retry-cap must be at least 1".into()));
        }
        Ok(DownloadConfig {
            chain,
            source,
            api_key: args.api_key.clone().or_else(|| file.api_key.clone()),
            rate_limit,
            retry_cap,
            backoff_ms: args.backoff_ms.or(file.backoff_ms).unwrap_or(DEFAULT_BACKOFF_MS),
            range,
            chunk_size,
            slack: args.slack.or(file.slack).unwrap_or(ResolveOptions::default().slack),
            workers: common.workers,
            chunk_dir: file.chunk_dir.clone().unwrap_or_else(|| common.chunk_dir()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Pajek,
    Both,
}

impl OutputFormat {
    pub fn formats(self) -> &'static [GraphFormat] {
        match self {
            OutputFormat::Json => &[GraphFormat::Json],
            OutputFormat::Pajek => &[GraphFormat::Pajek],
            OutputFormat::Both => &[GraphFormat::Json, GraphFormat::Pajek],
        }
    }
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "pajek" => Ok(OutputFormat::Pajek),
            "both" => Ok(OutputFormat::Both),
            _ => Err(CliError::Usage(format!(
                "unknown format {s:?}; expected json, pajek or both"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Pajek => "pajek",
            OutputFormat::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildConfig {
    pub chunk_dir: PathBuf,
    pub format: OutputFormat,
}

impl BuildConfig {
    pub fn resolve(args: &BuildArgs, file: &FileConfig, common: &Common) -> Result<Self, CliError> {
        let format = match args.format.as_deref().or(file.format.as_deref()) {
            Some(raw) => raw.parse()?,
            None => OutputFormat::Both,
        };
        Ok(BuildConfig {
            chunk_dir: args
                .chunk_dir
                .clone()
                .or_else(|| file.chunk_dir.clone())
                .unwrap_or_else(|| common.chunk_dir()),
            format,
        })
    }
}

/// Where the default graph of an output directory lives.
pub fn default_graph_path(output_dir: &Path, format: GraphFormat) -> PathBuf {
    output_dir.join(format!("graph.{}", format.extension()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    pub graph: PathBuf,
    /// Chunks whose transactions restore the directed counters.
    pub chunk_dir: Option<PathBuf>,
    pub aspl_mode: AsplMode,
    pub workers: usize,
}

impl AnalyzeConfig {
    pub fn resolve(args: &AnalyzeArgs, file: &FileConfig, common: &Common) -> Result<Self, CliError> {
        let explicit = args.graph.clone().or_else(|| file.graph.clone());
        let chunk_dir = args.chunk_dir.clone().or_else(|| file.chunk_dir.clone());
        let (graph, chunk_dir) = match explicit {
            Some(graph) => (graph, chunk_dir),
            None => {
                // Pipeline mode: the graph and chunks that build left behind.
                let json = default_graph_path(&common.output_dir, GraphFormat::Json);
                let pajek = default_graph_path(&common.output_dir, GraphFormat::Pajek);
                let graph = if !json.exists() && pajek.exists() { pajek } else { json };
                let chunks = common.chunk_dir();
                (graph, chunk_dir.or_else(|| chunks.is_dir().then_some(chunks)))
            }
        };
        let aspl_mode = match args.sample_sources.or(file.sample_sources) {
            Some(0) => return Err(CliError::Usage("--sample-sources must be at least 1".into())),
            Some(sources) => AsplMode::Sampled {
                sources,
                seed: args.seed.or(file.seed).unwrap_or(0),
            },
            None => AsplMode::Exact,
        };
        Ok(AnalyzeConfig {
            graph,
            chunk_dir,
            aspl_mode,
            workers: common.workers,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareConfig {
    #[serde(flatten)]
    pub analyze: AnalyzeConfig,
    pub seed: u64,
    pub samples: usize,
    pub acc_threshold: f64,
    pub aspl_threshold: f64,
}

pub const DEFAULT_SEED: u64 = 0;

impl CompareConfig {
    pub fn resolve(args: &CompareArgs, file: &FileConfig, common: &Common) -> Result<Self, CliError> {
        let samples = args.samples.or(file.samples).unwrap_or(1);
        if samples == 0 {
            return Err(CliError::Usage("--samples must be at least 1".into()));
        }
        let acc_threshold = args
            .acc_threshold
            .or(file.acc_threshold)
            .unwrap_or(DEFAULT_ACC_THRESHOLD);
        let aspl_threshold = args
            .aspl_threshold
            .or(file.aspl_threshold)
            .unwrap_or(DEFAULT_ASPL_THRESHOLD);
        if !(acc_threshold.is_finite() && aspl_threshold.is_finite()) {
            return Err(CliError::Usage("thresholds must be finite".into()));
        }
        Ok(CompareConfig {
            analyze: AnalyzeConfig::resolve(&args.analyze, file, common)?,
            seed: args.analyze.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            samples,
            acc_threshold,
            aspl_threshold,
        })
    }
}
