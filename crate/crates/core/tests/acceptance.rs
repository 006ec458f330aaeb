//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use chaingraph::baseline::{
    compare, generate_er_gnm, sample_edges, verdict_from_values, CompareOptions, ComponentMetrics, ErSpec, Thresholds,
};
use chaingraph::graph::{io, write_json, write_pajek};
use chaingraph::ingestion::{
    download, BlockProvider, BlockRange, DownloadOptions, FixtureProvider, ProviderError, RetryPolicy,
};
use chaingraph::metrics::analyze;
use chaingraph::{Chain, InteractionGraph, Transaction};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if $cond {
        } else {
            return Err(format!($($msg)*));
        }
    };
}

fn c1_published_verdicts() -> Outcome {
    let t = Thresholds::default();
    let eth = verdict_from_values(
        ComponentMetrics {
            acc: 0.02134,
            aspl: 1.4256,
        },
        &[ComponentMetrics {
            acc: 0.000015,
            aspl: 10.3584,
        }],
        t,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (eth.aspl_ratio - 0.1376).abs() <= 0.005,
        "ethereum aspl_ratio {}",
        eth.aspl_ratio
    );
    ensure!(
        (1400.0..=1550.0).contains(&eth.acc_ratio),
        "ethereum acc_ratio {}",
        eth.acc_ratio
    );
    ensure!(eth.is_small_world, "ethereum not classified small-world");

    let btc = verdict_from_values(
        ComponentMetrics {
            acc: 0.024,
            aspl: 190.4879,
        },
        &[ComponentMetrics {
            acc: 0.000029,
            aspl: 6.461,
        }],
        t,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (btc.aspl_ratio - 29.48).abs() <= 0.05,
        "bitcoin aspl_ratio {}",
        btc.aspl_ratio
    );
    ensure!(
        (btc.acc_ratio - 827.6).abs() <= 1.0,
        "bitcoin acc_ratio {}",
        btc.acc_ratio
    );
    ensure!(!btc.is_small_world, "bitcoin classified small-world");
    Ok(format!(
        "ethereum acc {:.1} aspl {:.4} small-world; bitcoin acc {:.1} aspl {:.2} not",
        eth.acc_ratio, eth.aspl_ratio, btc.acc_ratio, btc.aspl_ratio
    ))
}

fn c2_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut largest = 0;
    for i in 0..100 {
        let g = mixed_graph(i, &mut rng);
        largest = largest.max(g.node_count());
        let workers = 1 + i % 4;
        check_report(&analyze(&g, workers), &reference(&g), 1e-12)
            .map_err(|e| format!("graph {i} (n={}): {e}", g.node_count()))?;
    }
    Ok(format!("100 graphs up to n={largest} match the naive reference"))
}

fn c3_closed_forms() -> Outcome {
    for n in 3..=12 {
        let r = analyze(&graph_from_edges(n, &complete(n)), 2);
        ensure!(r.main_component_acc == Some(1.0), "K{n} ACC {:?}", r.main_component_acc);
        ensure!(
            r.main_component_aspl == Some(1.0),
            "K{n} ASPL {:?}",
            r.main_component_aspl
        );
    }
    for n in 3..=50 {
        let r = analyze(&graph_from_edges(n, &path(n)), 2);
        let expected = (n as f64 + 1.0) / 3.0;
        ensure!(r.main_component_acc == Some(0.0), "P{n} ACC {:?}", r.main_component_acc);
        let aspl = r.main_component_aspl.ok_or(format!("P{n} ASPL undefined"))?;
        ensure!(close(aspl, expected, 1e-12), "P{n} ASPL {aspl} != {expected}");
    }
    let c5 = analyze(&graph_from_edges(5, &cycle(5)), 1).main_component_aspl;
    ensure!(c5 == Some(1.5), "C5 ASPL {c5:?}");
    Ok("K3..K12, P3..P50, C5".into())
}

fn pajek_bytes(g: &InteractionGraph) -> Vec<u8> {
    let mut out = Vec::new();
    write_pajek(g, &mut out).expect("in-memory write");
    out
}

fn c4_er_generator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..1000 {
        let n = rng.random_range(0..=150usize);
        let max = n * n.saturating_sub(1) / 2;
        let m = rng.random_range(0..=max);
        let spec = ErSpec::new(n, m, rng.random());
        let g = generate_er_gnm(&spec).map_err(|e| e.to_string())?;
        ensure!(
            g.node_count() == n && g.edge_count() == m,
            "spec {i} {spec:?}: {} edges",
            g.edge_count()
        );
    }
    let spec = ErSpec::new(1000, 2000, 42);
    let runs: Vec<Vec<u8>> = (0..3).map(|_| pajek_bytes(&generate_er_gnm(&spec).unwrap())).collect();
    ensure!(
        runs[0] == runs[1] && runs[1] == runs[2],
        "Pajek export differs between runs"
    );

    let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
    for seed in 0..2000u64 {
        let edges = sample_edges(4, 3, seed).map_err(|e| e.to_string())?;
        *counts.entry(edges.into_iter().collect()).or_default() += 1;
    }
    ensure!(counts.len() == 20, "{} distinct edge sets of G(4,3)", counts.len());
    let (lo, hi) = counts.values().fold((f64::MAX, 0.0f64), |(lo, hi), &c| {
        let f = c as f64 / 2000.0;
        (lo.min(f), hi.max(f))
    });
    ensure!(lo >= 0.03 && hi <= 0.07, "G(4,3) frequencies span [{lo}, {hi}]");
    Ok(format!(
        "1000 exact edge counts; 3 identical exports; G(4,3) frequencies in [{lo:.4}, {hi:.4}]"
    ))
}

fn c5_small_world_discrimination() -> Outcome {
    const SEED: u64 = 42;
    let options = CompareOptions {
        seed: SEED,
        samples: 1,
        workers: 2,
        ..CompareOptions::default()
    };
    let ws = graph_from_edges(30, &watts_strogatz(30, 4, 0.1, SEED));
    let ws_report = compare(&ws, &options).map_err(|e| e.to_string())?;
    let er = generate_er_gnm(&ErSpec::new(30, 60, SEED)).map_err(|e| e.to_string())?;
    let er_report = compare(
        &er,
        &CompareOptions {
            seed: SEED + 1,
            ..options
        },
    )
    .map_err(|e| e.to_string())?;
    let (w, e) = (&ws_report.verdict, &er_report.verdict);
    let detail = format!(
        "ring: acc ratio {:.3}, aspl ratio {:.3}, small-world {}; G(30,60): acc ratio {:.3}, aspl ratio {:.3}, small-world {}",
        w.acc_ratio, w.aspl_ratio, w.is_small_world, e.acc_ratio, e.aspl_ratio, e.is_small_world
    );
    ensure!(w.is_small_world, "rewired ring not classified small-world ({detail})");
    ensure!(!e.is_small_world, "G(30,60) classified small-world ({detail})");
    Ok(detail)
}

struct StopAfter<P> {
    inner: P,
    after: u64,
    served: AtomicU64,
    stop: Arc<AtomicBool>,
}

impl<P: BlockProvider> BlockProvider for StopAfter<P> {
    fn chain(&self) -> Chain {
        self.inner.chain()
    }
    fn latest_height(&self) -> Result<u64, ProviderError> {
        self.inner.latest_height()
    }
    fn earliest_height(&self) -> u64 {
        self.inner.earliest_height()
    }
    fn block_timestamp(&self, h: u64) -> Result<u64, ProviderError> {
        self.inner.block_timestamp(h)
    }
    fn block_transactions(&self, h: u64) -> Result<Vec<Transaction>, ProviderError> {
        if self.served.fetch_add(1, Ordering::SeqCst) + 1 >= self.after {
            self.stop.store(true, Ordering::SeqCst);
        }
        self.inner.block_transactions(h)
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect()
}

fn c6_crash_safety() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chain100");
    let provider = FixtureProvider::open(&fixture, Chain::Ethereum).map_err(|e| e.to_string())?;
    let range = BlockRange::new(5_000_000, 5_000_099).map_err(|e| e.to_string())?;
    let options = |workers| DownloadOptions {
        workers,
        retry: RetryPolicy::immediate(Some(3)),
        stop: Arc::new(AtomicBool::new(false)),
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (reference, resumed, four) = (
        tmp.path().join("ref"),
        tmp.path().join("resumed"),
        tmp.path().join("four"),
    );

    download(&provider, range, 10, &reference, &options(1)).map_err(|e| e.to_string())?;

    let first = options(1);
    let stopping = StopAfter {
        inner: provider.clone(),
        after: 40,
        served: AtomicU64::new(0),
        stop: first.stop.clone(),
    };
    let (cp, summary) = download(&stopping, range, 10, &resumed, &first).map_err(|e| e.to_string())?;
    ensure!(summary.interrupted, "first run was not interrupted");
    let done_after_stop = cp.done.len();
    let (cp, _) = download(&provider, range, 10, &resumed, &options(1)).map_err(|e| e.to_string())?;
    ensure!(cp.is_complete(), "resumed run incomplete");
    ensure!(
        files(&reference) == files(&resumed),
        "resumed chunks differ from the uninterrupted run"
    );

    download(&provider, range, 10, &four, &options(4)).map_err(|e| e.to_string())?;
    ensure!(
        files(&reference) == files(&four),
        "4 workers produced different chunks than 1"
    );
    Ok(format!(
        "stopped with {done_after_stop}/10 chunks, resumed byte-identical; 1 vs 4 workers identical"
    ))
}

fn c7_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mem = Path::new("memory");
    for i in 0..100 {
        let g = mixed_graph(i, &mut rng);
        let mut json = Vec::new();
        write_json(&g, &mut json).unwrap();
        let mut json2 = Vec::new();
        write_json(&g, &mut json2).unwrap();
        ensure!(json == json2, "graph {i}: JSON export not deterministic");
        let pajek = pajek_bytes(&g);
        ensure!(pajek == pajek_bytes(&g), "graph {i}: Pajek export not deterministic");

        let from_json = io::read_json(json.as_slice(), mem).map_err(|e| format!("graph {i}: {e}"))?;
        let from_pajek = io::read_pajek(pajek.as_slice(), mem).map_err(|e| format!("graph {i}: {e}"))?;
        ensure!(
            from_json.same_structure(&g),
            "graph {i}: JSON round trip changed the graph"
        );
        ensure!(
            from_pajek.same_structure(&g),
            "graph {i}: Pajek round trip changed the graph"
        );
    }
    let mut g = InteractionGraph::new(Chain::Bitcoin);
    let key = |s: &str| chaingraph::graph::canonicalize_address(s, Chain::Bitcoin).unwrap();
    for _ in 0..2 {
        g.add_transaction(&Transaction {
            sender: Some(key("A")),
            recipient: key("B"),
            amount: 4,
            block_height: 0,
            timestamp: 0,
        });
    }
    let golden = "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 8\n";
    let got = String::from_utf8(pajek_bytes(&g)).unwrap();
    ensure!(got == golden, "golden Pajek mismatch: {got:?}");
    Ok("100 graphs round-trip through JSON and Pajek; golden file matches".into())
}

fn c8_construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..500 {
        let pool = rng.random_range(1..30usize);
        let count = rng.random_range(0..200usize);
        let txs: Vec<Transaction> = (0..count)
            .map(|t| Transaction {
                sender: rng.random_bool(0.9).then(|| key(rng.random_range(0..pool))),
                recipient: key(rng.random_range(0..pool)),
                amount: rng.random_range(0..1000),
                block_height: t as u64,
                timestamp: t as u64,
            })
            .collect();
        let g = InteractionGraph::from_transactions(Chain::Ethereum, &txs);
        let pairs: std::collections::BTreeSet<(String, String)> = txs
            .iter()
            .filter_map(|tx| {
                let s = tx.sender.as_ref()?.as_str().to_string();
                let r = tx.recipient.as_str().to_string();
                (s != r).then(|| (s.clone().min(r.clone()), s.max(r)))
            })
            .collect();
        ensure!(
            g.edge_count() == pairs.len(),
            "case {case}: {} edges, {} distinct pairs",
            g.edge_count(),
            pairs.len()
        );
        let degree_sum: usize = g.node_ids().map(|id| g.degree(id) as usize).sum();
        ensure!(degree_sum == 2 * g.edge_count(), "case {case}: degree sum {degree_sum}");
    }
    Ok("500 random transaction sequences".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 verdicts from published metrics", c1_published_verdicts),
        ("2 metrics match naive oracles", c2_oracle_equivalence),
        ("3 closed forms", c3_closed_forms),
        ("4 ER generator", c4_er_generator),
        ("5 small-world discrimination", c5_small_world_discrimination),
        ("6 ingestion crash safety", c6_crash_safety),
        ("7 format round trips", c7_round_trips),
        ("8 graph construction", c8_construction),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let clock = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
