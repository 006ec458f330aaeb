/// Compressed sparse row adjacency over zero-based node indices.
///
/// Every undirected edge appears in both endpoint lists; each list is sorted
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    /// Builds from `(u, v)` pairs. Pairs must be distinct and `u != v`.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Adjacency
    where
        I: IntoIterator<Item = (usize, usize)> + Clone,
    {
        let mut degree = vec![0usize; node_count];
        for (u, v) in edges.clone() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let mut targets = vec![0u32; *offsets.last().unwrap()];
        for (u, v) in edges {
            targets[cursor[u]] = v as u32;
            cursor[u] += 1;
            targets[cursor[v]] = u as u32;
            cursor[v] += 1;
        }
        for u in 0..node_count {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Adjacency { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }
}
