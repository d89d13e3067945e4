//! A simulated replica: its own chain and mempool, reacting to messages.

use rating_core::chain::{Block, Chain, ChainConfig, Mempool, MiningParams, Transaction};
use rating_core::Hash32;

use crate::SimEvent;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForkDecision {
    Keep,
    Switch,
}

/// Longest chain wins; at equal height the lexicographically smaller head
/// hash wins.
pub fn fork_choice(local: &Chain, remote_height: u64, remote_head: Hash32) -> ForkDecision {
    let local_key = (local.height(), std::cmp::Reverse(local.head_hash()));
    let remote_key = (remote_height, std::cmp::Reverse(remote_head));
    if remote_key > local_key {
        ForkDecision::Switch
    } else {
        ForkDecision::Keep
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Tx(Transaction),
    Block(Block),
    ChainRequest,
    ChainResponse(Vec<Block>),
}

/// A message a node wants sent.
#[derive(Debug, Clone)]
pub struct Outgoing {
    pub to: Target,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    One(NodeId),
    /// Every peer, minus the given one.
    AllExcept(Option<NodeId>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    chain: Chain,
    mempool: Mempool,
    log: Vec<SimEvent>,
    switches: usize,
}

impl Node {
    pub fn new(id: NodeId, config: ChainConfig) -> Self {
        Self { id, chain: Chain::new(config), mempool: Mempool::new(), log: Vec::new(), switches: 0 }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn log(&self) -> &[SimEvent] {
        &self.log
    }

    /// How many times the node abandoned its chain for a better one.
    pub fn switches(&self) -> usize {
        self.switches
    }

    pub(crate) fn record(&mut self, event: SimEvent) {
        self.log.push(event);
    }

    /// A client handed this node a transaction.
    pub fn submit_local(&mut self, tx: Transaction) -> Vec<Outgoing> {
        match self.mempool.submit(&self.chain, tx.clone()) {
            Ok(_) => vec![Outgoing { to: Target::AllExcept(None), payload: Payload::Tx(tx) }],
            Err(_) => Vec::new(),
        }
    }

    pub fn handle(&mut self, from: NodeId, payload: Payload) -> Vec<Outgoing> {
        match payload {
            Payload::Tx(tx) => self.on_tx(from, tx),
            Payload::Block(block) => self.on_block(from, block),
            Payload::ChainRequest => vec![Outgoing {
                to: Target::One(from),
                payload: Payload::ChainResponse(self.chain.blocks().to_vec()),
            }],
            Payload::ChainResponse(blocks) => self.on_chain(blocks),
        }
    }

    fn on_tx(&mut self, from: NodeId, tx: Transaction) -> Vec<Outgoing> {
        match self.mempool.submit(&self.chain, tx.clone()) {
            Ok(_) => vec![Outgoing { to: Target::AllExcept(Some(from)), payload: Payload::Tx(tx) }],
            Err(_) => Vec::new(),
        }
    }

    fn on_block(&mut self, from: NodeId, block: Block) -> Vec<Outgoing> {
        let hash = block.hash();
        if self.chain.contains_block(&hash) {
            return Vec::new();
        }
        if block.prev_hash == self.chain.head_hash() {
            if self.chain.validate_and_append(block.clone()).is_err() {
                return Vec::new();
            }
            self.mempool.prune(&self.chain);
            return vec![Outgoing { to: Target::AllExcept(Some(from)), payload: Payload::Block(block) }];
        }
        // Not a child of our tip: fetch the sender's chain if its head could win.
        if fork_choice(&self.chain, block.height, hash) == ForkDecision::Switch {
            vec![Outgoing { to: Target::One(from), payload: Payload::ChainRequest }]
        } else {
            Vec::new()
        }
    }

    fn on_chain(&mut self, blocks: Vec<Block>) -> Vec<Outgoing> {
        let Some(head) = blocks.last() else { return Vec::new() };
        if fork_choice(&self.chain, head.height, head.hash()) == ForkDecision::Keep {
            return Vec::new();
        }
        let Ok(remote) = Chain::from_blocks(self.chain.config().clone(), blocks) else {
            return Vec::new();
        };
        let orphaned: Vec<Transaction> =
            self.chain.transactions().filter(|tx| !remote.contains_tx(&tx.tx_id)).cloned().collect();
        let mut pending: Vec<Transaction> = self.mempool.pending().into_iter().cloned().collect();
        pending.extend(orphaned);
        self.chain = remote;
        self.mempool = Mempool::new();
        self.mempool.reinject(&self.chain, pending);
        self.switches += 1;
        vec![Outgoing { to: Target::AllExcept(None), payload: Payload::Block(self.chain.head().clone()) }]
    }

    /// Mines one block if anything is minable.
    pub fn mine(&mut self, params: &MiningParams) -> Vec<Outgoing> {
        if self.mempool.ready_count(&self.chain) == 0 {
            return Vec::new();
        }
        match self.chain.mine_block(&mut self.mempool, params) {
            Ok(block) => vec![Outgoing { to: Target::AllExcept(None), payload: Payload::Block(block) }],
            Err(_) => Vec::new(),
        }
    }

    pub fn announce_head(&self) -> Vec<Outgoing> {
        vec![Outgoing { to: Target::AllExcept(None), payload: Payload::Block(self.chain.head().clone()) }]
    }
}
