use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{canonicalize_address, Chain, InteractionGraph, NodeId};

use super::BaselineError;

/// Parameters of a uniform random graph with exactly `n` nodes and `m` edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub samples: usize,
}

impl ErSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> ErSpec {
        ErSpec { n, m, seed, samples: 1 }
    }

    pub fn max_edges(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.m > self.max_edges() {
            return Err(BaselineError::TooManyEdges {
                n: self.n,
                m: self.m,
                max: self.max_edges(),
            });
        }
        if self.samples == 0 {
            return Err(BaselineError::NoSamples);
        }
        Ok(())
    }

    /// Seed of sample `i`. Sample 0 uses the spec seed unchanged.
    pub fn sample_seed(&self, i: usize) -> u64 {
        if i == 0 {
            self.seed
        } else {
            splitmix64(self.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthetic key of baseline node `i` (1-based): a hex address holding `i`.
pub fn synthetic_key(i: usize) -> String {
    format!("0x{i:040x}")
}

/// Draws `m` distinct unordered pairs uniformly without replacement.
///
/// Pairs are rejection-sampled; above half density the complement is
/// sampled instead so the expected number of draws stays below `2m`.
pub fn sample_edges(n: usize, m: usize, seed: u64) -> Result<BTreeSet<(usize, usize)>, BaselineError> {
    ErSpec::new(n, m, seed).validate()?;
    let total = n * n.saturating_sub(1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = m > total / 2;
    let want = if dense { total - m } else { m };
    let mut picked = BTreeSet::new();
    while picked.len() < want {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            picked.insert((u.min(v), u.max(v)));
        }
    }
    if !dense {
        return Ok(picked);
    }
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if !picked.contains(&(u, v)) {
                edges.insert((u, v));
            }
        }
    }
    Ok(edges)
}

/// Builds the random graph for `spec` (its first sample seed). Every edge
/// carries amount 0 and one synthetic transaction.
pub fn generate_er_gnm(spec: &ErSpec) -> Result<InteractionGraph, BaselineError> {
    generate_with_seed(spec.n, spec.m, spec.seed)
}

pub(crate) fn generate_with_seed(n: usize, m: usize, seed: u64) -> Result<InteractionGraph, BaselineError> {
    let edges = sample_edges(n, m, seed)?;
    let mut graph = InteractionGraph::new(Chain::Ethereum);
    for i in 1..=n {
        let key = canonicalize_address(&synthetic_key(i), Chain::Ethereum).expect("synthetic keys are valid");
        graph.add_node(key);
    }
    for (u, v) in edges {
        graph.bump_edge(NodeId::from_index(u), NodeId::from_index(v), 0, 1);
    }
    Ok(graph)
}
