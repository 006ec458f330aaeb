//! Transaction graphs of distributed ledgers: block download with resumable
//! checkpoints, graph construction, small-world metrics and an Erdős–Rényi
//! baseline comparison.

pub mod baseline;
#[cfg(feature = "cli")]
pub mod cli;
pub mod graph;
pub mod ingestion;
pub mod metrics;

pub use graph::{AddressKey, Chain, InteractionGraph, NodeId, Transaction};
