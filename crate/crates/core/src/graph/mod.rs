//! Account-interaction graphs built from ledger transactions.
//!
//! The graph is undirected and simple: one edge per unordered pair of
//! accounts that ever transacted, carrying the summed amount and the number
//! of transactions on that pair. Directed activity (transactions sent and
//! received) is tracked per node, separately from the edge structure.

mod address;
mod adjacency;
pub mod io;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use address::{canonicalize_address, looks_like_ethereum, AddressError, AddressKey, Chain};
pub use adjacency::Adjacency;
pub use io::{export_json, export_pajek, import_graph, write_json, write_pajek, GraphFormat};

/// 1-based node identifier, assigned in first-seen order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(id: u32) -> Option<NodeId> {
        (id >= 1).then_some(NodeId(id))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position, as used by [`Adjacency`].
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> NodeId {
        NodeId(index as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One value transfer. `sender` is `None` for coinbase-style rewards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub sender: Option<AddressKey>,
    pub recipient: AddressKey,
    /// Base units (wei or satoshi).
    pub amount: u128,
    pub block_height: u64,
    /// Unix seconds.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeData {
    pub aggregated_amount: u128,
    pub tx_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeEntry {
    key: AddressKey,
    in_tx: u64,
    out_tx: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    chain: Chain,
    nodes: Vec<NodeEntry>,
    lookup: HashMap<String, NodeId>,
    // Keyed by (low id, high id).
    edges: BTreeMap<(NodeId, NodeId), EdgeData>,
    degrees: Vec<u32>,
}

impl InteractionGraph {
    pub fn new(chain: Chain) -> Self {
        InteractionGraph {
            chain,
            nodes: Vec::new(),
            lookup: HashMap::new(),
            edges: BTreeMap::new(),
            degrees: Vec::new(),
        }
    }

    pub fn from_transactions<'a, I>(chain: Chain, txs: I) -> Self
    where
        I: IntoIterator<Item = &'a Transaction>,
    {
        let mut graph = InteractionGraph::new(chain);
        for tx in txs {
            graph.add_transaction(tx);
        }
        graph
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers `key`, returning its existing id if already present.
    pub fn add_node(&mut self, key: AddressKey) -> NodeId {
        debug_assert_eq!(key.chain(), self.chain, "address from a different chain");
        if let Some(&id) = self.lookup.get(key.as_str()) {
            return id;
        }
        let id = NodeId::from_index(self.nodes.len());
        self.lookup.insert(key.as_str().to_string(), id);
        self.nodes.push(NodeEntry {
            key,
            in_tx: 0,
            out_tx: 0,
        });
        self.degrees.push(0);
        id
    }

    pub fn node_id(&self, key: &str) -> Option<NodeId> {
        self.lookup.get(key).copied()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn key(&self, id: NodeId) -> &AddressKey {
        &self.nodes[id.index()].key
    }

    pub fn node_ids(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    pub fn keys(&self) -> impl ExactSizeIterator<Item = &AddressKey> + '_ {
        self.nodes.iter().map(|n| &n.key)
    }

    pub fn in_tx(&self, id: NodeId) -> u64 {
        self.nodes[id.index()].in_tx
    }

    pub fn out_tx(&self, id: NodeId) -> u64 {
        self.nodes[id.index()].out_tx
    }

    /// Undirected simple degree.
    pub fn degree(&self, id: NodeId) -> u32 {
        self.degrees[id.index()]
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<&EdgeData> {
        self.edges.get(&ordered(a, b))
    }

    /// Edges as `(low, high, data)` in ascending `(low, high)` order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (NodeId, NodeId, &EdgeData)> + '_ {
        self.edges.iter().map(|(&(a, b), d)| (a, b, d))
    }

    /// Applies one transaction. Both endpoints are registered; a distinct
    /// pair gets (or reuses) its single undirected edge. Self-transfers and
    /// senderless rewards only touch the per-node counters.
    pub fn add_transaction(&mut self, tx: &Transaction) {
        let sender = tx.sender.as_ref().map(|k| self.add_node(k.clone()));
        let recipient = self.add_node(tx.recipient.clone());
        self.nodes[recipient.index()].in_tx += 1;
        if let Some(sender) = sender {
            self.nodes[sender.index()].out_tx += 1;
            if sender != recipient {
                self.bump_edge(sender, recipient, tx.amount, 1);
            }
        }
    }

    /// Adds `amount` and `tx_count` to the edge `{a, b}`, creating it if
    /// needed. Returns `true` when the edge is new. Self-pairs are ignored.
    pub fn bump_edge(&mut self, a: NodeId, b: NodeId, amount: u128, tx_count: u64) -> bool {
        assert!(self.contains(a) && self.contains(b), "edge endpoint is not a node");
        if a == b {
            return false;
        }
        let mut created = false;
        let entry = self.edges.entry(ordered(a, b)).or_insert_with(|| {
            created = true;
            EdgeData::default()
        });
        entry.aggregated_amount += amount;
        entry.tx_count += tx_count;
        if created {
            self.degrees[a.index()] += 1;
            self.degrees[b.index()] += 1;
        }
        created
    }

    /// Rebuilds directed counters and per-edge transaction counts from raw
    /// transactions, e.g. after loading a graph file that does not carry
    /// them. Transactions touching unknown nodes are skipped; the number
    /// skipped is returned.
    pub fn restore_counters<'a, I>(&mut self, txs: I) -> usize
    where
        I: IntoIterator<Item = &'a Transaction>,
    {
        for node in &mut self.nodes {
            node.in_tx = 0;
            node.out_tx = 0;
        }
        for edge in self.edges.values_mut() {
            edge.tx_count = 0;
        }
        let mut skipped = 0;
        for tx in txs {
            let Some(recipient) = self.node_id(tx.recipient.as_str()) else {
                skipped += 1;
                continue;
            };
            let sender = match &tx.sender {
                Some(key) => match self.node_id(key.as_str()) {
                    Some(id) => Some(id),
                    None => {
                        skipped += 1;
                        continue;
                    }
                },
                None => None,
            };
            self.nodes[recipient.index()].in_tx += 1;
            if let Some(sender) = sender {
                self.nodes[sender.index()].out_tx += 1;
                if let Some(edge) = self.edges.get_mut(&ordered(sender, recipient)) {
                    edge.tx_count += 1;
                }
            }
        }
        skipped
    }

    /// Compares what the graph files persist: key order, edge set, amounts.
    pub fn same_structure(&self, other: &InteractionGraph) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.keys().zip(other.keys()).all(|(a, b)| a.as_str() == b.as_str())
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(other.edges.iter())
                .all(|((ka, da), (kb, db))| ka == kb && da.aggregated_amount == db.aggregated_amount)
    }

    /// Compressed sparse adjacency with sorted neighbor lists.
    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(
            self.nodes.len(),
            self.edges.keys().map(|&(a, b)| (a.index(), b.index())),
        )
    }
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
