use crate::graph::{Adjacency, InteractionGraph, NodeId};

use super::parallel::map_units;
use super::MetricError;

/// Reusable neighbor marks: `marks[w] == stamp` iff `w` is a neighbor of the
/// node currently being scored.
pub(crate) struct NeighborMarks {
    marks: Vec<u32>,
}

impl NeighborMarks {
    pub(crate) fn new(node_count: usize) -> Self {
        NeighborMarks {
            marks: vec![0; node_count],
        }
    }
}

/// Fraction of linked neighbor pairs around `u`; zero below degree 2.
pub(crate) fn coefficient(adj: &Adjacency, u: usize, scratch: &mut NeighborMarks) -> f64 {
    let neighbors = adj.neighbors(u);
    let d = neighbors.len();
    if d < 2 {
        return 0.0;
    }
    let stamp = u as u32 + 1;
    for &v in neighbors {
        scratch.marks[v as usize] = stamp;
    }
    // Each linked pair {v, w} is seen from both v and w.
    let mut twice_links: u64 = 0;
    for &v in neighbors {
        twice_links += adj
            .neighbors(v as usize)
            .iter()
            .filter(|&&w| scratch.marks[w as usize] == stamp)
            .count() as u64;
    }
    twice_links as f64 / (d as f64 * (d - 1) as f64)
}

/// Local coefficient of every node, in index order.
pub fn clustering_coefficients(adj: &Adjacency, workers: usize) -> Vec<f64> {
    let n = adj.node_count();
    map_units(
        n,
        workers,
        || NeighborMarks::new(n),
        |scratch, range| range.map(|u| coefficient(adj, u, scratch)).collect::<Vec<_>>(),
    )
    .into_iter()
    .flat_map(|(_, part)| part)
    .collect()
}

pub fn local_clustering(graph: &InteractionGraph, node: NodeId) -> Result<f64, MetricError> {
    if !graph.contains(node) {
        return Err(MetricError::UnknownNode(node.get()));
    }
    let adj = graph.adjacency();
    Ok(coefficient(
        &adj,
        node.index(),
        &mut NeighborMarks::new(adj.node_count()),
    ))
}

/// Mean local coefficient over `nodes` (all nodes when `None`).
pub fn average_clustering(graph: &InteractionGraph, nodes: Option<&[NodeId]>) -> Result<f64, MetricError> {
    let adj = graph.adjacency();
    let indices: Vec<usize> = match nodes {
        Some(ids) => ids
            .iter()
            .map(|&id| {
                graph
                    .contains(id)
                    .then(|| id.index())
                    .ok_or(MetricError::UnknownNode(id.get()))
            })
            .collect::<Result<_, _>>()?,
        None => (0..adj.node_count()).collect(),
    };
    let coefficients = clustering_coefficients(&adj, 1);
    mean_over(&coefficients, &indices).ok_or(MetricError::Undefined("clustering of an empty node set"))
}

/// Mean of `values` at `indices`, summed in the order given.
pub(crate) fn mean_over(values: &[f64], indices: &[usize]) -> Option<f64> {
    if indices.is_empty() {
        return None;
    }
    let sum: f64 = indices.iter().map(|&i| values[i]).sum();
    Some(sum / indices.len() as f64)
}
