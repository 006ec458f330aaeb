use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, InteractionGraph, NodeId};

use super::components::label_components;
use super::parallel::map_units;
use super::MetricError;

/// How the main-component ASPL is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AsplMode {
    /// One BFS from every node of the component.
    #[default]
    Exact,
    /// BFS from `sources` nodes drawn with `seed`; the result is an estimate.
    Sampled { sources: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLength {
    pub aspl: f64,
    /// Largest eccentricity seen; the true diameter in exact mode.
    pub max_eccentricity: u32,
    pub sources: usize,
    pub estimate: bool,
}

pub(crate) struct BfsScratch {
    dist: Vec<u32>,
    queue: Vec<u32>,
}

impl BfsScratch {
    pub(crate) fn new(node_count: usize) -> Self {
        BfsScratch {
            dist: vec![u32::MAX; node_count],
            queue: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Totals {
    distance_sum: u128,
    reached: u64,
    max_eccentricity: u32,
    // Sources whose reach differed from the expected component size.
    mismatched: u64,
}

/// Unweighted single-source distances; returns (sum, nodes reached including
/// the source, eccentricity).
fn bfs(adj: &Adjacency, source: usize, scratch: &mut BfsScratch) -> (u64, usize, u32) {
    let BfsScratch { dist, queue } = scratch;
    queue.clear();
    queue.push(source as u32);
    dist[source] = 0;
    let mut head = 0;
    let mut sum = 0u64;
    let mut ecc = 0;
    while head < queue.len() {
        let u = queue[head] as usize;
        head += 1;
        let du = dist[u];
        sum += u64::from(du);
        ecc = du;
        for &v in adj.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push(v);
            }
        }
    }
    for &u in queue.iter() {
        dist[u as usize] = u32::MAX;
    }
    (sum, queue.len(), ecc)
}

fn totals(adj: &Adjacency, sources: &[usize], component_size: usize, workers: usize) -> Totals {
    let n = adj.node_count();
    map_units(
        sources.len(),
        workers,
        || BfsScratch::new(n),
        |scratch, range| {
            let mut t = Totals::default();
            for &s in &sources[range] {
                let (sum, reached, ecc) = bfs(adj, s, scratch);
                t.distance_sum += u128::from(sum);
                t.reached += reached as u64;
                t.max_eccentricity = t.max_eccentricity.max(ecc);
                if reached != component_size {
                    t.mismatched += 1;
                }
            }
            t
        },
    )
    .into_iter()
    .fold(Totals::default(), |acc, (_, t)| Totals {
        distance_sum: acc.distance_sum + t.distance_sum,
        reached: acc.reached + t.reached,
        max_eccentricity: acc.max_eccentricity.max(t.max_eccentricity),
        mismatched: acc.mismatched + t.mismatched,
    })
}

/// Mean shortest-path length over the pairs of one connected component,
/// given as ascending zero-based indices.
pub(crate) fn component_path_length(
    adj: &Adjacency,
    members: &[usize],
    mode: AsplMode,
    workers: usize,
) -> Result<PathLength, MetricError> {
    let c = members.len();
    if c < 2 {
        return Err(MetricError::Undefined(
            "path length of a component with fewer than 2 nodes",
        ));
    }
    let (sources, estimate) = match mode {
        AsplMode::Sampled { sources: k, seed } if k < c => {
            if k == 0 {
                return Err(MetricError::Undefined("path length from zero sampled sources"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, c, k)
                .into_iter()
                .map(|i| members[i])
                .collect();
            picked.sort_unstable();
            (picked, true)
        }
        _ => (members.to_vec(), false),
    };
    let t = totals(adj, &sources, c, workers);
    if t.mismatched > 0 {
        return Err(MetricError::NotAComponent);
    }
    let pairs = sources.len() as u128 * (c as u128 - 1);
    Ok(PathLength {
        aspl: t.distance_sum as f64 / pairs as f64,
        max_eccentricity: t.max_eccentricity,
        sources: sources.len(),
        estimate,
    })
}

/// Exact average shortest-path length of the component formed by `nodes`.
pub fn aspl(graph: &InteractionGraph, nodes: &[NodeId]) -> Result<f64, MetricError> {
    let adj = graph.adjacency();
    let mut members = Vec::with_capacity(nodes.len());
    for &id in nodes {
        if !graph.contains(id) {
            return Err(MetricError::UnknownNode(id.get()));
        }
        members.push(id.index());
    }
    members.sort_unstable();
    members.dedup();
    if members.len() < 2 {
        return Err(MetricError::Undefined(
            "path length of a component with fewer than 2 nodes",
        ));
    }
    let components = label_components(&adj);
    let label = components.label(members[0]);
    if members.iter().any(|&m| components.label(m) != label) || components.size_of(label) != members.len() {
        return Err(MetricError::NotAComponent);
    }
    component_path_length(&adj, &members, AsplMode::Exact, 1).map(|p| p.aspl)
}
