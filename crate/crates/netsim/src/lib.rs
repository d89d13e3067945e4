//! Deterministic in-process network of rating-chain replicas.
//!
//! Time advances in discrete ticks. Every random choice (latency, drops,
//! which node mines, header nonce seeds) comes from one seeded PRNG consumed
//! in a fixed order, so a `(config, workload)` pair always produces the same
//! event logs and final chains.

mod node;
mod scenario;
mod sim;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rating_core::chain::Transaction;
use rating_core::Hash32;

pub use node::{fork_choice, ForkDecision, Node, NodeId, Outgoing, Payload, Target};
pub use scenario::{GeneratedWorkload, Scenario, ScenarioTx, WorkloadSpec};
pub use sim::{run_sim, NodeReport, SimReport, Simulation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

/// Nodes in `side` cannot exchange messages with the rest between
/// `start_tick` (inclusive) and `end_tick` (exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub start_tick: u64,
    pub end_tick: u64,
    pub side: BTreeSet<NodeId>,
}

impl Partition {
    pub fn separates(&self, a: NodeId, b: NodeId, tick: u64) -> bool {
        (self.start_tick..self.end_tick).contains(&tick) && self.side.contains(&a) != self.side.contains(&b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    /// Chance per tick that a node with minable transactions finds a block.
    pub probability_per_tick: f64,
    pub difficulty: u32,
    pub max_txs: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { probability_per_tick: 0.02, difficulty: 6, max_txs: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub node_count: usize,
    pub seed: u64,
    /// Inclusive bounds on per-message delay.
    pub latency_ticks: [u64; 2],
    #[serde(default)]
    pub drop_probability: f64,
    #[serde(default)]
    pub partitions: Vec<Partition>,
    #[serde(default)]
    pub mining: MiningConfig,
    /// Each node re-announces its head this often.
    #[serde(default = "default_heartbeat")]
    pub heartbeat_interval: u64,
    /// Hard stop even if the network has not settled.
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
}

fn default_heartbeat() -> u64 {
    25
}

fn default_max_ticks() -> u64 {
    100_000
}

impl SimConfig {
    pub fn new(node_count: usize, seed: u64) -> Self {
        Self {
            node_count,
            seed,
            latency_ticks: [1, 5],
            drop_probability: 0.0,
            partitions: Vec::new(),
            mining: MiningConfig::default(),
            heartbeat_interval: default_heartbeat(),
            max_ticks: default_max_ticks(),
        }
    }

    pub fn with_partition(mut self, start_tick: u64, end_tick: u64, side: impl IntoIterator<Item = NodeId>) -> Self {
        self.partitions.push(Partition { start_tick, end_tick, side: side.into_iter().collect() });
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.node_count == 0 {
            return bad("node_count must be at least 1".into());
        }
        if self.latency_ticks[0] > self.latency_ticks[1] {
            return bad("latency min exceeds max".into());
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return bad("drop_probability must be within [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.mining.probability_per_tick) || self.mining.probability_per_tick == 0.0 {
            return bad("mining probability must be within (0, 1]".into());
        }
        if self.mining.max_txs == 0 || self.heartbeat_interval == 0 {
            return bad("max_txs and heartbeat_interval must be positive".into());
        }
        for p in &self.partitions {
            if p.start_tick >= p.end_tick {
                return bad(format!("partition {}..{} is empty", p.start_tick, p.end_tick));
            }
            if p.side.is_empty() || p.side.len() >= self.node_count || p.side.iter().any(|&n| n >= self.node_count) {
                return bad("partition side must be a proper, non-empty subset of the nodes".into());
            }
        }
        Ok(())
    }

    /// Last tick at which a partition is still in force.
    pub fn partitions_end(&self) -> u64 {
        self.partitions.iter().map(|p| p.end_tick).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TxGossip,
    BlockAnnounce,
    ChainRequest,
    ChainResponse,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TxGossip => "tx_gossip",
            Self::BlockAnnounce => "block_announce",
            Self::ChainRequest => "chain_request",
            Self::ChainResponse => "chain_response",
        })
    }
}

/// A delivered message. Field order is the delivery order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimEvent {
    pub tick: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub digest: Hash32,
    pub kind: EventKind,
}

/// A client submitting `tx` to `node` at `tick`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadTx {
    pub tick: u64,
    pub node: NodeId,
    pub tx: Transaction,
}

/// Event logs as JSON lines, node by node.
pub fn dump_event_logs(report: &SimReport) -> String {
    let mut out = String::new();
    for node in &report.nodes {
        for event in &node.log {
            out.push_str(&serde_json::to_string(&serde_json::json!({
                "node": node.id,
                "tick": event.tick,
                "kind": event.kind,
                "from": event.from,
                "to": event.to,
                "digest": event.digest,
            })).expect("events serialize"));
            out.push('\n');
        }
    }
    out
}
