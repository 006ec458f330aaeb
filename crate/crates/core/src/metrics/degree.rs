use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::InteractionGraph;

/// `degree -> node count`, serialized as sorted `[degree, count]` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<(u64, u64)>", into = "Vec<(u64, u64)>")]
pub struct Histogram(BTreeMap<u64, u64>);

impl Histogram {
    pub fn from_values<I: IntoIterator<Item = u64>>(values: I) -> Histogram {
        let mut counts = BTreeMap::new();
        for v in values {
            *counts.entry(v).or_insert(0) += 1;
        }
        Histogram(counts)
    }

    pub fn count(&self, degree: u64) -> u64 {
        self.0.get(&degree).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn max_degree(&self) -> Option<u64> {
        self.0.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.0.iter().map(|(&d, &c)| (d, c))
    }
}

impl From<Vec<(u64, u64)>> for Histogram {
    fn from(pairs: Vec<(u64, u64)>) -> Self {
        Histogram(pairs.into_iter().collect())
    }
}

impl From<Histogram> for Vec<(u64, u64)> {
    fn from(h: Histogram) -> Self {
        h.0.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Transactions received per node.
    pub in_histogram: Histogram,
    /// Transactions sent per node.
    pub out_histogram: Histogram,
    /// Undirected simple degree.
    pub total_histogram: Histogram,
    pub zero_in_fraction: Option<f64>,
    pub zero_out_fraction: Option<f64>,
    pub max_degree: u64,
    pub max_degree_fraction_of_nodes: Option<f64>,
    /// Filled in by `analyze`, which knows the main component.
    pub max_degree_fraction_of_main_component: Option<f64>,
}

pub fn degree_distributions(graph: &InteractionGraph) -> DegreeReport {
    let ids = || graph.node_ids();
    let in_histogram = Histogram::from_values(ids().map(|id| graph.in_tx(id)));
    let out_histogram = Histogram::from_values(ids().map(|id| graph.out_tx(id)));
    let total_histogram = Histogram::from_values(ids().map(|id| u64::from(graph.degree(id))));
    let n = graph.node_count();
    let fraction = |count: u64| (n > 0).then(|| count as f64 / n as f64);
    let max_degree = total_histogram.max_degree().unwrap_or(0);
    DegreeReport {
        zero_in_fraction: fraction(in_histogram.count(0)),
        zero_out_fraction: fraction(out_histogram.count(0)),
        max_degree_fraction_of_nodes: fraction(max_degree),
        max_degree_fraction_of_main_component: None,
        max_degree,
        in_histogram,
        out_histogram,
        total_histogram,
    }
}
