//! Small-world diagnostics over an interaction graph: degree histograms,
//! component census, average clustering coefficient (ACC) and the average
//! shortest path length (ASPL) of the main component.
//!
//! Per-node clustering and per-source BFS are partitioned over worker
//! threads. Partial results are reduced in node order, so a report does not
//! depend on the worker count.

mod clustering;
mod components;
mod degree;
mod parallel;
mod paths;

use web_time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::InteractionGraph;

pub use clustering::{average_clustering, clustering_coefficients, local_clustering};
pub use components::{connected_components, label_components, ComponentCensus, Components};
pub use degree::{degree_distributions, DegreeReport, Histogram};
pub use paths::{aspl, AsplMode, PathLength};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("no node with id {0}")]
    UnknownNode(u32),
    #[error("undefined metric: {0}")]
    Undefined(&'static str),
    #[error("node set is not exactly one connected component")]
    NotAComponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub workers: usize,
    pub aspl_mode: AsplMode,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            workers: 1,
            aspl_mode: AsplMode::Exact,
        }
    }
}

/// Wall-clock seconds spent per metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub degrees: f64,
    pub components: f64,
    pub clustering: f64,
    pub aspl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: Option<f64>,
    pub degrees: DegreeReport,
    pub components: ComponentCensus,
    pub main_component_avg_degree: Option<f64>,
    pub graph_acc: Option<f64>,
    pub main_component_acc: Option<f64>,
    pub main_component_aspl: Option<f64>,
    /// Exact diameter in exact mode, a lower bound when sampled.
    pub main_component_max_eccentricity: Option<u32>,
    pub aspl_mode: AsplMode,
    /// True when the ASPL comes from sampled sources.
    pub aspl_is_estimate: bool,
    pub timings: Timings,
}

impl MetricsReport {
    /// Equality on every metric, ignoring wall-clock timings.
    pub fn same_metrics(&self, other: &MetricsReport) -> bool {
        let mut a = self.clone();
        a.timings = other.timings;
        &a == other
    }
}

pub fn analyze(graph: &InteractionGraph, workers: usize) -> MetricsReport {
    analyze_with(
        graph,
        &AnalyzeOptions {
            workers,
            ..AnalyzeOptions::default()
        },
    )
}

pub fn analyze_with(graph: &InteractionGraph, options: &AnalyzeOptions) -> MetricsReport {
    let workers = options.workers.max(1);
    let n = graph.node_count();
    let mut timings = Timings::default();

    let clock = Instant::now();
    let mut degrees = degree_distributions(graph);
    timings.degrees = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let adj = graph.adjacency();
    let components = label_components(&adj);
    let census = components.census();
    let main_members = components
        .main_label()
        .map(|l| components.members(l))
        .unwrap_or_default();
    timings.components = clock.elapsed().as_secs_f64();

    let main_size = main_members.len();
    degrees.max_degree_fraction_of_main_component =
        (main_size > 0).then(|| degrees.max_degree as f64 / main_size as f64);
    let main_degree_sum: usize = main_members.iter().map(|&u| adj.degree(u)).sum();

    let clock = Instant::now();
    let coefficients = clustering_coefficients(&adj, workers);
    let all: Vec<usize> = (0..n).collect();
    let graph_acc = clustering::mean_over(&coefficients, &all);
    let main_component_acc = clustering::mean_over(&coefficients, &main_members);
    timings.clustering = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let path = paths::component_path_length(&adj, &main_members, options.aspl_mode, workers).ok();
    timings.aspl = clock.elapsed().as_secs_f64();

    MetricsReport {
        node_count: n,
        edge_count: graph.edge_count(),
        avg_degree: (n > 0).then(|| 2.0 * graph.edge_count() as f64 / n as f64),
        degrees,
        components: census,
        main_component_avg_degree: (main_size > 0).then(|| main_degree_sum as f64 / main_size as f64),
        graph_acc,
        main_component_acc,
        main_component_aspl: path.map(|p| p.aspl),
        main_component_max_eccentricity: path.map(|p| p.max_eccentricity),
        aspl_mode: options.aspl_mode,
        aspl_is_estimate: path.is_some_and(|p| p.estimate),
        timings,
    }
}
