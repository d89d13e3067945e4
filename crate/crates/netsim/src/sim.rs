use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rating_core::chain::{Chain, ChainConfig, MiningParams};
use rating_core::Hash32;

use crate::node::{Node, NodeId, Outgoing, Payload, Target};
use crate::{EventKind, SimConfig, SimError, SimEvent, WorkloadTx};

#[derive(Debug, Clone)]
pub struct NodeReport {
    pub id: NodeId,
    pub height: u64,
    pub head_hash: Hash32,
    pub state_digest: Hash32,
    pub chain: Chain,
    pub log: Vec<SimEvent>,
    pub switches: usize,
    pub pending_txs: usize,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub ticks: u64,
    /// The network settled before `max_ticks`.
    pub quiescent: bool,
    pub delivered: u64,
    pub dropped: u64,
    pub nodes: Vec<NodeReport>,
}

impl SimReport {
    /// Every node has the same head and the same state digest.
    pub fn converged(&self) -> bool {
        let first = &self.nodes[0];
        self.nodes.iter().all(|n| n.head_hash == first.head_hash && n.state_digest == first.state_digest)
    }
}

pub struct Simulation {
    config: SimConfig,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<(SimEvent, u64)>>,
    payloads: HashMap<u64, Payload>,
    seq: u64,
    workload: Vec<WorkloadTx>,
    next_workload: usize,
    tick: u64,
    delivered: u64,
    dropped: u64,
}

impl Simulation {
    pub fn new(config: SimConfig, chain_config: ChainConfig, mut workload: Vec<WorkloadTx>) -> Result<Self, SimError> {
        config.validate()?;
        if let Some(w) = workload.iter().find(|w| w.node >= config.node_count) {
            return Err(SimError::Config(format!("workload targets node {} of {}", w.node, config.node_count)));
        }
        workload.sort_by_key(|w| w.tick);
        let nodes = (0..config.node_count).map(|id| Node::new(id, chain_config.clone())).collect();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            nodes,
            queue: BinaryHeap::new(),
            payloads: HashMap::new(),
            seq: 0,
            workload,
            next_workload: 0,
            tick: 0,
            delivered: 0,
            dropped: 0,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    fn send(&mut self, from: NodeId, out: Outgoing) {
        let recipients: Vec<NodeId> = match out.to {
            Target::One(to) => vec![to],
            Target::AllExcept(skip) => (0..self.nodes.len()).filter(|&n| n != from && Some(n) != skip).collect(),
        };
        let (kind, digest) = match &out.payload {
            Payload::Tx(tx) => (EventKind::TxGossip, tx.tx_id),
            Payload::Block(b) => (EventKind::BlockAnnounce, b.hash()),
            Payload::ChainRequest => (EventKind::ChainRequest, self.nodes[from].chain().head_hash()),
            Payload::ChainResponse(blocks) => {
                (EventKind::ChainResponse, blocks.last().map(|b| b.hash()).unwrap_or_default())
            }
        };
        for to in recipients {
            if self.config.partitions.iter().any(|p| p.separates(from, to, self.tick)) {
                self.dropped += 1;
                continue;
            }
            if self.config.drop_probability > 0.0 && self.rng.gen_bool(self.config.drop_probability) {
                self.dropped += 1;
                continue;
            }
            let [lo, hi] = self.config.latency_ticks;
            let at = self.tick + self.rng.gen_range(lo..=hi);
            let seq = self.seq;
            self.seq += 1;
            self.payloads.insert(seq, out.payload.clone());
            self.queue.push(Reverse((SimEvent { tick: at, from, to, digest, kind }, seq)));
        }
    }

    fn send_all(&mut self, from: NodeId, outs: Vec<Outgoing>) {
        for out in outs {
            self.send(from, out);
        }
    }

    fn snapshot(&self) -> Vec<(Hash32, usize)> {
        self.nodes.iter().map(|n| (n.chain().head_hash(), n.mempool().len())).collect()
    }

    /// Advances one tick: client submissions, deliveries, mining, heartbeats.
    pub fn step(&mut self) {
        while let Some(w) = self.workload.get(self.next_workload).filter(|w| w.tick <= self.tick).cloned() {
            self.next_workload += 1;
            let outs = self.nodes[w.node].submit_local(w.tx);
            self.send_all(w.node, outs);
        }

        while self.queue.peek().is_some_and(|Reverse((e, _))| e.tick <= self.tick) {
            let Reverse((event, seq)) = self.queue.pop().expect("peeked");
            let payload = self.payloads.remove(&seq).expect("payload stored with event");
            let to = event.to;
            let from = event.from;
            self.nodes[to].record(event);
            self.delivered += 1;
            let outs = self.nodes[to].handle(from, payload);
            self.send_all(to, outs);
        }

        let mining = self.config.mining;
        for id in 0..self.nodes.len() {
            if self.nodes[id].mempool().ready_count(self.nodes[id].chain()) == 0 {
                continue;
            }
            if !self.rng.gen_bool(mining.probability_per_tick) {
                continue;
            }
            let params = MiningParams::new(mining.max_txs, mining.difficulty, self.tick).with_seed(self.rng.gen());
            let outs = self.nodes[id].mine(&params);
            self.send_all(id, outs);
        }

        let interval = self.config.heartbeat_interval;
        for id in 0..self.nodes.len() {
            if (self.tick + id as u64).is_multiple_of(interval) {
                let outs = self.nodes[id].announce_head();
                self.send_all(id, outs);
            }
        }
        self.tick += 1;
    }

    /// Runs until the network settles or `max_ticks` passes.
    ///
    /// Settled means: the workload is fully submitted, partitions are over,
    /// every mempool is empty and no head or mempool changed for long enough
    /// that any remaining disagreement would have surfaced through
    /// heartbeats.
    pub fn run(mut self) -> SimReport {
        let quiet = 2 * self.config.heartbeat_interval + 3 * self.config.latency_ticks[1] + 1;
        let mut last_change = 0;
        let mut quiescent = false;
        while self.tick < self.config.max_ticks {
            let before = self.snapshot();
            self.step();
            if self.snapshot() != before {
                last_change = self.tick;
            }
            let settled = self.next_workload == self.workload.len()
                && self.tick > self.config.partitions_end()
                && self.nodes.iter().all(|n| n.mempool().is_empty())
                && self.tick - last_change >= quiet;
            if settled {
                quiescent = true;
                break;
            }
        }
        self.into_report(quiescent)
    }

    fn into_report(self, quiescent: bool) -> SimReport {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| NodeReport {
                id: n.id,
                height: n.chain().height(),
                head_hash: n.chain().head_hash(),
                state_digest: n.chain().tip_digest(),
                chain: n.chain().clone(),
                log: n.log().to_vec(),
                switches: n.switches(),
                pending_txs: n.mempool().len(),
            })
            .collect();
        SimReport { ticks: self.tick, quiescent, delivered: self.delivered, dropped: self.dropped, nodes }
    }
}

/// Builds and runs a simulation with the default chain configuration.
pub fn run_sim(config: SimConfig, workload: Vec<WorkloadTx>) -> Result<SimReport, SimError> {
    Ok(Simulation::new(config, ChainConfig::default(), workload)?.run())
}
