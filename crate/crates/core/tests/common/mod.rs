//! Test-only graph builders and brute-force reference metrics.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use chaingraph::baseline::synthetic_key;
use chaingraph::graph::canonicalize_address;
use chaingraph::metrics::MetricsReport;
use chaingraph::{Chain, InteractionGraph, Transaction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn key(i: usize) -> chaingraph::AddressKey {
    canonicalize_address(&synthetic_key(i + 1), Chain::Ethereum).unwrap()
}

/// Nodes `0..n` (inserted in order) joined by `edges`, one transaction each.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> InteractionGraph {
    let mut g = InteractionGraph::new(Chain::Ethereum);
    for i in 0..n {
        g.add_node(key(i));
    }
    for (t, &(a, b)) in edges.iter().enumerate() {
        g.add_transaction(&Transaction {
            sender: Some(key(a)),
            recipient: key(b),
            amount: (t as u128 + 1) * 1000,
            block_height: t as u64,
            timestamp: t as u64,
        });
    }
    g
}

pub fn complete(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

pub fn path(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

pub fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Each node linked to its `k/2` successors on a ring.
pub fn ring_lattice(n: usize, k: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 1..=k / 2 {
            edges.push((i, (i + j) % n));
        }
    }
    edges
}

/// Ring lattice with each lattice edge `(i, i+j)` rewired with probability
/// `p` to `(i, w)` for a uniform `w` avoiding self-loops and duplicates.
pub fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges: BTreeSet<(usize, usize)> = ring_lattice(n, k).into_iter().map(|(a, b)| norm(a, b)).collect();
    for j in 1..=k / 2 {
        for i in 0..n {
            if rng.random::<f64>() >= p {
                continue;
            }
            let old = norm(i, (i + j) % n);
            if !edges.contains(&old) {
                continue;
            }
            let degree = edges.iter().filter(|&&(a, b)| a == i || b == i).count();
            if degree >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != i && !edges.contains(&norm(i, w)) {
                    break w;
                }
            };
            edges.remove(&old);
            edges.insert(norm(i, w));
        }
    }
    edges.into_iter().collect()
}

/// `m` distinct random pairs over `0..n`, drawn independently of the
/// library generator.
pub fn random_edges(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    while set.len() < m {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

pub struct Matrix {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
}

impl Matrix {
    pub fn of(g: &InteractionGraph) -> Matrix {
        let n = g.node_count();
        let mut adj = vec![vec![false; n]; n];
        for (a, b, _) in g.edges() {
            adj[a.index()][b.index()] = true;
            adj[b.index()][a.index()] = true;
        }
        Matrix { n, adj }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].iter().filter(|&&x| x).count()
    }

    /// Triple loop over neighbor pairs.
    pub fn clustering(&self, u: usize) -> f64 {
        let nbrs: Vec<usize> = (0..self.n).filter(|&v| self.adj[u][v]).collect();
        let d = nbrs.len();
        if d < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for x in 0..d {
            for y in x + 1..d {
                if self.adj[nbrs[x]][nbrs[y]] {
                    links += 1;
                }
            }
        }
        links as f64 / (d * (d - 1) / 2) as f64
    }

    /// Floyd–Warshall hop distances; `usize::MAX` when unreachable.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let inf = usize::MAX;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for v in 0..n {
                if self.adj[u][v] {
                    d[u][v] = 1;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if d[i][k] == inf {
                    continue;
                }
                for j in 0..n {
                    if d[k][j] != inf && d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    /// Components by iterative DFS, each listed ascending, ordered by their
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut stack = vec![s];
            let mut members = Vec::new();
            seen[s] = true;
            while let Some(u) = stack.pop() {
                members.push(u);
                for v in 0..self.n {
                    if self.adj[u][v] && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Every metric of the report, recomputed naively.
#[derive(Debug, PartialEq)]
pub struct Reference {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: Option<f64>,
    pub in_histogram: BTreeMap<u64, u64>,
    pub out_histogram: BTreeMap<u64, u64>,
    pub total_histogram: BTreeMap<u64, u64>,
    pub zero_in_fraction: Option<f64>,
    pub zero_out_fraction: Option<f64>,
    pub max_degree: u64,
    pub max_degree_fraction_of_nodes: Option<f64>,
    pub max_degree_fraction_of_main_component: Option<f64>,
    pub component_count: usize,
    pub component_sizes: Vec<usize>,
    pub main_component_size: usize,
    pub main_component_fraction: Option<f64>,
    pub main_component_avg_degree: Option<f64>,
    pub graph_acc: Option<f64>,
    pub main_component_acc: Option<f64>,
    pub main_component_aspl: Option<f64>,
    pub main_component_max_eccentricity: Option<u32>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn reference(g: &InteractionGraph) -> Reference {
    let m = Matrix::of(g);
    let n = m.n;
    let ids: Vec<_> = g.node_ids().collect();
    let count = |values: Vec<u64>| {
        let mut h = BTreeMap::new();
        for v in values {
            *h.entry(v).or_insert(0) += 1;
        }
        h
    };
    let degrees: Vec<u64> = (0..n).map(|u| m.degree(u) as u64).collect();
    let edge_count = degrees.iter().sum::<u64>() as usize / 2;
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let frac = |x: usize| (n > 0).then(|| x as f64 / n as f64);

    let comps = m.components();
    let mut sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    // Largest; among equals, the one holding the smallest node.
    let main: Vec<usize> = comps
        .iter()
        .fold(None::<&Vec<usize>>, |best, c| match best {
            Some(b) if b.len() >= c.len() => Some(b),
            _ => Some(c),
        })
        .cloned()
        .unwrap_or_default();

    let coeff: Vec<f64> = (0..n).map(|u| m.clustering(u)).collect();
    let (aspl, ecc) = if main.len() >= 2 {
        let d = m.distances();
        let mut sum = 0usize;
        let mut pairs = 0usize;
        let mut ecc = 0usize;
        for (x, &u) in main.iter().enumerate() {
            for &v in &main[x + 1..] {
                sum += d[u][v];
                pairs += 1;
                ecc = ecc.max(d[u][v]);
            }
        }
        (Some(sum as f64 / pairs as f64), Some(ecc as u32))
    } else {
        (None, None)
    };

    Reference {
        node_count: n,
        edge_count,
        avg_degree: frac(2 * edge_count),
        in_histogram: count(ids.iter().map(|&id| g.in_tx(id)).collect()),
        out_histogram: count(ids.iter().map(|&id| g.out_tx(id)).collect()),
        total_histogram: count(degrees.clone()),
        zero_in_fraction: frac(ids.iter().filter(|&&id| g.in_tx(id) == 0).count()),
        zero_out_fraction: frac(ids.iter().filter(|&&id| g.out_tx(id) == 0).count()),
        max_degree,
        max_degree_fraction_of_nodes: frac(max_degree as usize),
        max_degree_fraction_of_main_component: (!main.is_empty()).then(|| max_degree as f64 / main.len() as f64),
        component_count: comps.len(),
        component_sizes: sizes,
        main_component_size: main.len(),
        main_component_fraction: frac(main.len()),
        main_component_avg_degree: mean(main.iter().map(|&u| degrees[u] as f64)),
        graph_acc: mean(coeff.iter().copied()),
        main_component_acc: mean(main.iter().map(|&u| coeff[u])),
        main_component_aspl: aspl,
        main_component_max_eccentricity: ecc,
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn close_opt(a: Option<f64>, b: Option<f64>, rel: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b, rel),
        (None, None) => true,
        _ => false,
    }
}

/// Field-by-field comparison; `Err` names the first mismatch.
pub fn check_report(r: &MetricsReport, e: &Reference, rel: f64) -> Result<(), String> {
    macro_rules! exact {
        ($name:literal, $a:expr, $b:expr) => {
            if $a != $b {
                return Err(format!("{}: {:?} != reference {:?}", $name, $a, $b));
            }
        };
    }
    macro_rules! approx {
        ($name:literal, $a:expr, $b:expr) => {
            if !close_opt($a, $b, rel) {
                return Err(format!("{}: {:?} != reference {:?}", $name, $a, $b));
            }
        };
    }
    let hist =
        |h: &chaingraph::metrics::Histogram| -> BTreeMap<u64, u64> { Vec::from(h.clone()).into_iter().collect() };
    exact!("node_count", r.node_count, e.node_count);
    exact!("edge_count", r.edge_count, e.edge_count);
    approx!("avg_degree", r.avg_degree, e.avg_degree);
    exact!("in_histogram", hist(&r.degrees.in_histogram), e.in_histogram);
    exact!("out_histogram", hist(&r.degrees.out_histogram), e.out_histogram);
    exact!("total_histogram", hist(&r.degrees.total_histogram), e.total_histogram);
    approx!("zero_in_fraction", r.degrees.zero_in_fraction, e.zero_in_fraction);
    approx!("zero_out_fraction", r.degrees.zero_out_fraction, e.zero_out_fraction);
    exact!("max_degree", r.degrees.max_degree, e.max_degree);
    approx!(
        "max_degree_fraction_of_nodes",
        r.degrees.max_degree_fraction_of_nodes,
        e.max_degree_fraction_of_nodes
    );
    approx!(
        "max_degree_fraction_of_main_component",
        r.degrees.max_degree_fraction_of_main_component,
        e.max_degree_fraction_of_main_component
    );
    exact!("component_count", r.components.count, e.component_count);
    exact!("component_sizes", r.components.sizes, e.component_sizes);
    exact!(
        "main_component_size",
        r.components.main_component_size,
        e.main_component_size
    );
    approx!(
        "main_component_fraction",
        r.components.main_component_fraction,
        e.main_component_fraction
    );
    approx!(
        "main_component_avg_degree",
        r.main_component_avg_degree,
        e.main_component_avg_degree
    );
    approx!("graph_acc", r.graph_acc, e.graph_acc);
    approx!("main_component_acc", r.main_component_acc, e.main_component_acc);
    approx!("main_component_aspl", r.main_component_aspl, e.main_component_aspl);
    exact!(
        "main_component_max_eccentricity",
        r.main_component_max_eccentricity,
        e.main_component_max_eccentricity
    );
    exact!("aspl_is_estimate", r.aspl_is_estimate, false);
    Ok(())
}

/// A random mix of ER-style and lattice-style graphs with at most 200 nodes,
/// with occasional isolated nodes and extra components.
pub fn mixed_graph(i: usize, rng: &mut ChaCha8Rng) -> InteractionGraph {
    let n = rng.random_range(1..=200usize);
    let max = n * (n - 1) / 2;
    let edges = match i % 3 {
        0 => {
            let m = rng.random_range(0..=max.min(3 * n));
            random_edges(n, m, rng)
        }
        1 if n >= 5 => {
            let k = 2 * rng.random_range(1..=((n - 1) / 2).min(4));
            watts_strogatz(n, k, rng.random_range(0.0..0.3), rng.random())
        }
        _ => {
            // Several disjoint pieces.
            let cut = rng.random_range(0..=n);
            let mut e = random_edges(cut.max(1), (cut * 2).min(cut * cut.saturating_sub(1) / 2), rng);
            if n - cut >= 3 {
                e.extend(cycle(n - cut).into_iter().map(|(a, b)| (a + cut, b + cut)));
            }
            e
        }
    };
    graph_from_edges(n, &edges)
}
