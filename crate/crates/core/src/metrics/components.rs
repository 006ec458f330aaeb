use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, InteractionGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCensus {
    pub count: usize,
    /// Component sizes, largest first.
    pub sizes: Vec<usize>,
    pub main_component_size: usize,
    pub main_component_fraction: Option<f64>,
}

/// Node-to-component labeling. Labels are numbered by the smallest node
/// index they contain, so label 0 always holds node 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl Components {
    pub fn label(&self, node: usize) -> u32 {
        self.labels[node]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size_of(&self, label: u32) -> usize {
        self.sizes[label as usize]
    }

    /// Largest component; ties go to the one holding the lowest node index.
    pub fn main_label(&self) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for (label, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(s, _)| size > s) {
                best = Some((size, label as u32));
            }
        }
        best.map(|(_, l)| l)
    }

    /// Zero-based node indices of one component, ascending.
    pub fn members(&self, label: u32) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn census(&self) -> ComponentCensus {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let nodes: usize = sizes.iter().sum();
        let main = sizes.first().copied().unwrap_or(0);
        ComponentCensus {
            count: sizes.len(),
            main_component_size: main,
            main_component_fraction: (nodes > 0).then(|| main as f64 / nodes as f64),
            sizes,
        }
    }
}

/// Labels connected components by breadth-first search.
pub fn label_components(adj: &Adjacency) -> Components {
    let n = adj.node_count();
    let mut labels = vec![u32::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = Vec::new();
    for start in 0..n {
        if labels[start] != u32::MAX {
            continue;
        }
        let label = sizes.len() as u32;
        labels[start] = label;
        queue.clear();
        queue.push(start as u32);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            for &v in adj.neighbors(u) {
                if labels[v as usize] == u32::MAX {
                    labels[v as usize] = label;
                    queue.push(v);
                }
            }
        }
        sizes.push(queue.len());
    }
    Components { labels, sizes }
}

pub fn connected_components(graph: &InteractionGraph) -> (ComponentCensus, Components) {
    let components = label_components(&graph.adjacency());
    (components.census(), components)
}
