use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::baseline::{compare, CompareOptions, ComparisonReport, Thresholds};
use crate::graph::{export_json, export_pajek, import_graph, GraphFormat, InteractionGraph};
use crate::ingestion::{
    self, list_chunks, read_chunk_dir, resolve_block_range, BlockProvider, BlockRange, Checkpoint, DownloadOptions,
    DownloadSummary, FixtureProvider, RateLimited, ResolveOptions, RetryPolicy, TimeInterval, CHECKPOINT_FILE,
};
use crate::metrics::{analyze_with, AnalyzeOptions, MetricsReport};
use crate::Chain;

use super::artifact::{sha256_files, up_to_date, Artifact, InputFile};
use super::config::{
    default_graph_path, AnalyzeConfig, BuildConfig, Common, CompareConfig, DownloadConfig, FileConfig, ProviderSource,
    RangeSpec,
};
use super::{Cli, CliError, Command};

pub const DOWNLOAD_MANIFEST: &str = "download.json";
pub const BUILD_MANIFEST: &str = "build.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const COMPARISON_FILE: &str = "comparison.json";

pub(super) fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let common = Common::resolve(&cli, &file)?;
    match &cli.command {
        Command::Download(args) => download(DownloadConfig::resolve(args, &file, &common)?, &common),
        Command::Build(args) => build(BuildConfig::resolve(args, &file, &common)?, &common),
        Command::Analyze(args) => analyze(AnalyzeConfig::resolve(args, &file, &common)?, &common),
        Command::Compare(args) => compare_cmd(CompareConfig::resolve(args, &file, &common)?, &common),
        Command::Report => report(&common),
    }
}

fn skip_notice(step: &str, path: &Path) {
    eprintln!(
        "{step}: {} is up to date; skipping (use --force to redo)",
        path.display()
    );
}

/// One process-wide flag raised by Ctrl-C.
fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let handler_flag = flag.clone();
        let installed = ctrlc::set_handler(move || {
            if handler_flag.swap(true, Ordering::SeqCst) {
                eprintln!("interrupt: already stopping");
            } else {
                eprintln!("interrupt: finishing in-flight chunks, then stopping");
            }
        });
        if let Err(e) = installed {
            eprintln!("warning: cannot install interrupt handler: {e}");
        }
        flag
    })
    .clone()
}

fn open_provider(cfg: &DownloadConfig) -> Result<Box<dyn BlockProvider>, CliError> {
    let provider: Box<dyn BlockProvider> = match &cfg.source {
        ProviderSource::Fixture(dir) => Box::new(FixtureProvider::open(dir, cfg.chain).map_err(CliError::runtime)?),
        #[cfg(feature = "net")]
        ProviderSource::Endpoint(url) => match cfg.chain {
            Chain::Ethereum => Box::new(ingestion::rpc::EthereumRpcProvider::new(url, cfg.api_key.as_deref())),
            Chain::Bitcoin => Box::new(ingestion::rpc::BitcoinRestProvider::new(url, cfg.api_key.as_deref())),
        },
        #[cfg(not(feature = "net"))]
        ProviderSource::Endpoint(_) => {
            return Err(CliError::Runtime(
                "this build has no network support; use --fixture".into(),
            ));
        }
    };
    Ok(match cfg.rate_limit {
        Some(per_second) => Box::new(RateLimited::new(provider, per_second)),
        None => provider,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct DownloadBody {
    chain: Chain,
    first: u64,
    last: u64,
    chunks: usize,
    summary: DownloadSummary,
}

fn clear_chunks(dir: &Path) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Ok(());
    }
    for chunk in list_chunks(dir).map_err(CliError::runtime)? {
        fs::remove_file(&chunk.path).map_err(|e| CliError::Runtime(format!("{}: {e}", chunk.path.display())))?;
    }
    let checkpoint = dir.join(CHECKPOINT_FILE);
    if checkpoint.exists() {
        fs::remove_file(&checkpoint).map_err(|e| CliError::Runtime(format!("{}: {e}", checkpoint.display())))?;
    }
    Ok(())
}

fn download(cfg: DownloadConfig, common: &Common) -> Result<(), CliError> {
    let provider = open_provider(&cfg)?;
    let retry = RetryPolicy {
        base_delay: Duration::from_millis(cfg.backoff_ms),
        max_attempts: cfg.retry_cap,
        ..RetryPolicy::default()
    };
    let range = match cfg.range {
        RangeSpec::Blocks { first, last } => {
            BlockRange::new(first, last).map_err(|e| CliError::Usage(e.to_string()))?
        }
        RangeSpec::Time { start, end } => {
            let interval = TimeInterval::new(start, end).map_err(|e| CliError::Usage(e.to_string()))?;
            let options = ResolveOptions {
                slack: cfg.slack,
                retry,
            };
            let range = resolve_block_range(interval, &provider, &options).map_err(CliError::runtime)?;
            eprintln!(
                "download: time {start}..={end} is blocks {}..={}",
                range.first(),
                range.last()
            );
            range
        }
    };

    let checkpoint_path = cfg.chunk_dir.join(CHECKPOINT_FILE);
    if common.force {
        clear_chunks(&cfg.chunk_dir)?;
    } else if let Some(cp) = Checkpoint::load_optional(&checkpoint_path).map_err(CliError::runtime)? {
        let same_job = cp.chain == cfg.chain && cp.range() == range && cp.chunk_size == cfg.chunk_size;
        if same_job && cp.is_complete() {
            skip_notice("download", &cfg.chunk_dir);
            return Ok(());
        }
        if same_job {
            eprintln!(
                "download: resuming, {} of {} chunks already done",
                cp.done.len(),
                cp.planned().count()
            );
        }
    }

    let options = DownloadOptions {
        workers: cfg.workers,
        retry,
        stop: interrupt_flag(),
    };
    let (checkpoint, summary) =
        ingestion::download(&provider, range, cfg.chunk_size, &cfg.chunk_dir, &options).map_err(CliError::runtime)?;
    if summary.interrupted {
        return Err(CliError::Runtime(format!(
            "download interrupted with {} chunks left; rerun the same command to resume",
            summary.chunks_remaining
        )));
    }
    let body = DownloadBody {
        chain: cfg.chain,
        first: range.first(),
        last: range.last(),
        chunks: checkpoint.done.len(),
        summary,
    };
    let manifest = common.output_dir.join(DOWNLOAD_MANIFEST);
    Artifact::new("download", &cfg, BTreeMap::new(), body)
        .write(&manifest)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", manifest.display())))?;
    println!(
        "downloaded blocks {}..={}: {} blocks, {} transactions this run, chunks in {}",
        range.first(),
        range.last(),
        summary.blocks_fetched,
        summary.transactions_written,
        cfg.chunk_dir.display()
    );
    Ok(())
}

fn chunk_input(dir: &Path) -> Result<InputFile, CliError> {
    let chunks = list_chunks(dir).map_err(CliError::runtime)?;
    let paths: Vec<PathBuf> = chunks.into_iter().map(|c| c.path).collect();
    Ok(InputFile {
        path: dir.to_path_buf(),
        sha256: sha256_files(&paths).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BuildBody {
    chain: Chain,
    node_count: usize,
    edge_count: usize,
    transactions: usize,
    outputs: BTreeMap<String, InputFile>,
}

fn build(cfg: BuildConfig, common: &Common) -> Result<(), CliError> {
    let checkpoint_path = cfg.chunk_dir.join(CHECKPOINT_FILE);
    let checkpoint = Checkpoint::load_optional(&checkpoint_path)
        .map_err(CliError::runtime)?
        .ok_or_else(|| CliError::Runtime(format!("{} not found; run download first", checkpoint_path.display())))?;
    if !checkpoint.is_complete() {
        return Err(CliError::Runtime(format!(
            "download in {} is incomplete ({} of {} chunks); rerun download to finish it",
            cfg.chunk_dir.display(),
            checkpoint.done.len(),
            checkpoint.planned().count()
        )));
    }
    let mut inputs = BTreeMap::new();
    inputs.insert("chunks".to_string(), chunk_input(&cfg.chunk_dir)?);
    let targets: Vec<(GraphFormat, PathBuf)> = cfg
        .format
        .formats()
        .iter()
        .map(|&f| (f, default_graph_path(&common.output_dir, f)))
        .collect();
    let manifest = common.output_dir.join(BUILD_MANIFEST);
    if !common.force && up_to_date(&manifest, &cfg, &inputs) && targets.iter().all(|(_, p)| p.exists()) {
        skip_notice("build", &manifest);
        return Ok(());
    }

    let txs = read_chunk_dir(&cfg.chunk_dir, checkpoint.chain).map_err(CliError::runtime)?;
    let graph = InteractionGraph::from_transactions(checkpoint.chain, &txs);
    fs::create_dir_all(&common.output_dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", common.output_dir.display())))?;
    thread::scope(|scope| {
        let handles: Vec<_> = targets
            .iter()
            .map(|(format, path)| {
                let graph = &graph;
                scope.spawn(move || match format {
                    GraphFormat::Json => export_json(graph, path),
                    GraphFormat::Pajek => export_pajek(graph, path),
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("export thread panicked").map_err(CliError::runtime))
    })?;

    let mut outputs = BTreeMap::new();
    for (format, path) in &targets {
        let hashed = InputFile::hash(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        outputs.insert(format.to_string(), hashed);
    }
    let body = BuildBody {
        chain: checkpoint.chain,
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        transactions: txs.len(),
        outputs,
    };
    Artifact::new("build", &cfg, inputs, body)
        .write(&manifest)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", manifest.display())))?;
    println!(
        "built graph: {} nodes, {} edges from {} transactions -> {}",
        graph.node_count(),
        graph.edge_count(),
        txs.len(),
        targets
            .iter()
            .map(|(_, p)| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn analysis_inputs(cfg: &AnalyzeConfig) -> Result<(GraphFormat, BTreeMap<String, InputFile>), CliError> {
    let format = GraphFormat::from_path(&cfg.graph).ok_or_else(|| {
        CliError::Usage(format!(
            "cannot tell the format of {} from its extension (use .json, .pajek or .net)",
            cfg.graph.display()
        ))
    })?;
    let mut inputs = BTreeMap::new();
    let graph = InputFile::hash(&cfg.graph)
        .map_err(|e| CliError::Runtime(format!("cannot read graph {}: {e}", cfg.graph.display())))?;
    inputs.insert("graph".to_string(), graph);
    if let Some(dir) = &cfg.chunk_dir {
        inputs.insert("chunks".to_string(), chunk_input(dir)?);
    }
    Ok((format, inputs))
}

fn load_graph(cfg: &AnalyzeConfig, format: GraphFormat) -> Result<InteractionGraph, CliError> {
    let mut graph = import_graph(&cfg.graph, format).map_err(CliError::runtime)?;
    if let Some(dir) = &cfg.chunk_dir {
        let txs = read_chunk_dir(dir, graph.chain()).map_err(CliError::runtime)?;
        let skipped = graph.restore_counters(&txs);
        if skipped > 0 {
            eprintln!(
                "warning: {skipped} transactions in {} touch nodes missing from the graph",
                dir.display()
            );
        }
    }
    Ok(graph)
}

fn analyze(cfg: AnalyzeConfig, common: &Common) -> Result<(), CliError> {
    let (format, inputs) = analysis_inputs(&cfg)?;
    let out = common.output_dir.join(METRICS_FILE);
    if !common.force && up_to_date(&out, &cfg, &inputs) {
        skip_notice("analyze", &out);
        return Ok(());
    }
    let graph = load_graph(&cfg, format)?;
    let report = analyze_with(
        &graph,
        &AnalyzeOptions {
            workers: cfg.workers,
            aspl_mode: cfg.aspl_mode,
        },
    );
    let artifact = Artifact::new("analyze", &cfg, inputs, report);
    artifact
        .write(&out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    emit(&metrics_text(&artifact.body));
    println!("wrote {}", out.display());
    Ok(())
}

fn compare_cmd(cfg: CompareConfig, common: &Common) -> Result<(), CliError> {
    let (format, inputs) = analysis_inputs(&cfg.analyze)?;
    let out = common.output_dir.join(COMPARISON_FILE);
    if !common.force && up_to_date(&out, &cfg, &inputs) {
        skip_notice("compare", &out);
        return Ok(());
    }
    let graph = load_graph(&cfg.analyze, format)?;
    let options = CompareOptions {
        seed: cfg.seed,
        samples: cfg.samples,
        workers: cfg.analyze.workers,
        thresholds: Thresholds {
            acc: cfg.acc_threshold,
            aspl: cfg.aspl_threshold,
        },
        aspl_mode: cfg.analyze.aspl_mode,
    };
    let report = compare(&graph, &options).map_err(CliError::runtime)?;
    let artifact = Artifact::new("compare", &cfg, inputs, report);
    artifact
        .write(&out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    emit(&comparison_text(&artifact.body));
    println!("wrote {}", out.display());
    Ok(())
}

macro_rules! line {
    ($out:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = writeln!($out, $($arg)*);
    }};
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write as _;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

fn pct(value: Option<f64>) -> String {
    value.map_or_else(|| "undefined".to_string(), |v| format!("{:.2}%", 100.0 * v))
}

fn metrics_text(r: &MetricsReport) -> String {
    let mut out = String::new();
    line!(out, "nodes                     {}", r.node_count);
    line!(out, "edges                     {}", r.edge_count);
    line!(out, "average degree            {}", opt(r.avg_degree));
    line!(out, "max degree                {}", r.degrees.max_degree);
    line!(out, "nodes never receiving     {}", pct(r.degrees.zero_in_fraction));
    line!(out, "nodes never sending       {}", pct(r.degrees.zero_out_fraction));
    line!(out, "components                {}", r.components.count);
    line!(
        out,
        "main component            {} nodes ({})",
        r.components.main_component_size,
        pct(r.components.main_component_fraction)
    );
    line!(out, "main component avg degree {}", opt(r.main_component_avg_degree));
    line!(out, "ACC (graph)               {}", opt(r.graph_acc));
    line!(out, "ACC (main component)      {}", opt(r.main_component_acc));
    line!(
        out,
        "ASPL (main component)     {}{}",
        opt(r.main_component_aspl),
        if r.aspl_is_estimate { " (estimate)" } else { "" }
    );
    if let Some(d) = r.main_component_max_eccentricity {
        line!(out, "max eccentricity          {d}");
    }
    out
}

fn comparison_text(c: &ComparisonReport) -> String {
    let mut out = String::new();
    let v = &c.verdict;
    line!(
        out,
        "baseline: G(n={}, m={}), {} sample(s), seeds {:?}",
        c.baseline_spec.n,
        c.baseline_spec.m,
        v.baseline_samples,
        c.baseline_seeds
    );
    line!(
        out,
        "ACC   subject {:.6}  baseline {:.6}  ratio {:.4}  (threshold >= {})",
        v.subject.acc,
        v.baseline_acc.mean,
        v.acc_ratio,
        v.acc_threshold
    );
    line!(
        out,
        "ASPL  subject {:.6}  baseline {:.6}  ratio {:.4}  (threshold <= {})",
        v.subject.aspl,
        v.baseline_aspl.mean,
        v.aspl_ratio,
        v.aspl_threshold
    );
    line!(out, "small world: {}", if v.is_small_world { "yes" } else { "no" });
    out
}

fn report(common: &Common) -> Result<(), CliError> {
    let dir = &common.output_dir;
    let mut found = false;
    let mut out = String::new();
    let read_err = |path: &Path, e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));

    let path = dir.join(DOWNLOAD_MANIFEST);
    if path.exists() {
        let a: Artifact<DownloadBody> = Artifact::read(&path).map_err(|e| read_err(&path, e))?;
        line!(out, "== download ({})", a.generated_at);
        line!(
            out,
            "{} blocks {}..={} in {} chunks",
            a.body.chain,
            a.body.first,
            a.body.last,
            a.body.chunks
        );
        found = true;
    }
    let path = dir.join(BUILD_MANIFEST);
    if path.exists() {
        let a: Artifact<BuildBody> = Artifact::read(&path).map_err(|e| read_err(&path, e))?;
        line!(out, "== build ({})", a.generated_at);
        line!(
            out,
            "{} graph: {} nodes, {} edges from {} transactions",
            a.body.chain,
            a.body.node_count,
            a.body.edge_count,
            a.body.transactions
        );
        for (format, file) in &a.body.outputs {
            line!(out, "{format:<6} {} sha256 {}", file.path.display(), file.sha256);
        }
        found = true;
    }
    let path = dir.join(METRICS_FILE);
    if path.exists() {
        let a: Artifact<MetricsReport> = Artifact::read(&path).map_err(|e| read_err(&path, e))?;
        line!(out, "== metrics ({})", a.generated_at);
        inputs_text(&mut out, &a.inputs);
        out.push_str(&metrics_text(&a.body));
        found = true;
    }
    let path = dir.join(COMPARISON_FILE);
    if path.exists() {
        let a: Artifact<ComparisonReport> = Artifact::read(&path).map_err(|e| read_err(&path, e))?;
        line!(out, "== comparison ({})", a.generated_at);
        inputs_text(&mut out, &a.inputs);
        out.push_str(&comparison_text(&a.body));
        found = true;
    }
    if !found {
        return Err(CliError::Runtime(format!("no reports found in {}", dir.display())));
    }
    emit(&out);
    Ok(())
}

fn inputs_text(out: &mut String, inputs: &BTreeMap<String, InputFile>) {
    for (role, file) in inputs {
        line!(out, "{role}: {} (sha256 {})", file.path.display(), file.sha256);
    }
}
