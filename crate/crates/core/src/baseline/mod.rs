//! Size-matched Erdős–Rényi baselines and the small-world classification.
//!
//! A subject graph is small-world when its main-component ACC is far above
//! that of a random graph with the same node and edge counts while its
//! main-component ASPL is no longer than the random graph's.

mod generator;
mod verdict;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::InteractionGraph;
use crate::metrics::{analyze_with, AnalyzeOptions, AsplMode, MetricsReport};

pub use generator::{generate_er_gnm, sample_edges, synthetic_key, ErSpec};
pub use verdict::{
    small_world_verdict, verdict_from_values, ComponentMetrics, SmallWorldVerdict, Spread, Thresholds,
    DEFAULT_ACC_THRESHOLD, DEFAULT_ASPL_THRESHOLD,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("cannot place {m} edges on {n} nodes (at most {max})")]
    TooManyEdges { n: usize, m: usize, max: usize },
    #[error("at least one baseline sample is required")]
    NoSamples,
    #[error("{role} {metric} is undefined")]
    UndefinedMetric { role: &'static str, metric: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub seed: u64,
    pub samples: usize,
    pub workers: usize,
    pub thresholds: Thresholds,
    pub aspl_mode: AsplMode,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            seed: 0,
            samples: 1,
            workers: 1,
            thresholds: Thresholds::default(),
            aspl_mode: AsplMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub subject: MetricsReport,
    pub baseline_spec: ErSpec,
    pub baseline_seeds: Vec<u64>,
    pub baselines: Vec<MetricsReport>,
    pub verdict: SmallWorldVerdict,
}

/// Analyzes `subject`, then `options.samples` random graphs with the same
/// node and edge counts, and classifies the subject against them.
pub fn compare(subject: &InteractionGraph, options: &CompareOptions) -> Result<ComparisonReport, BaselineError> {
    let analyze_options = AnalyzeOptions {
        workers: options.workers,
        aspl_mode: options.aspl_mode,
    };
    let report = analyze_with(subject, &analyze_options);
    compare_report(report, options)
}

/// Like [`compare`], reusing an existing subject report.
pub fn compare_report(subject: MetricsReport, options: &CompareOptions) -> Result<ComparisonReport, BaselineError> {
    let spec = ErSpec {
        n: subject.node_count,
        m: subject.edge_count,
        seed: options.seed,
        samples: options.samples,
    };
    spec.validate()?;
    let analyze_options = AnalyzeOptions {
        workers: options.workers,
        aspl_mode: options.aspl_mode,
    };
    let seeds: Vec<u64> = (0..spec.samples).map(|i| spec.sample_seed(i)).collect();
    let mut baselines = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let graph = generator::generate_with_seed(spec.n, spec.m, seed)?;
        baselines.push(analyze_with(&graph, &analyze_options));
    }
    let verdict = small_world_verdict(&subject, &baselines, options.thresholds)?;
    Ok(ComparisonReport {
        subject,
        baseline_spec: spec,
        baseline_seeds: seeds,
        baselines,
        verdict,
    })
}
