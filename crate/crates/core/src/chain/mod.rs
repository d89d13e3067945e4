//! A miniature proof-of-work chain whose transactions are `rate` calls.
//!
//! Blocks link by header hash and commit to their transactions through a
//! Merkle root. The tip ledger state is the fold of `rate` over every
//! transaction from genesis, so any replica replaying the same blocks ends
//! with the same state digest.

mod block;
mod mempool;
mod store;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use block::{tx_root, Block, Transaction};
pub use mempool::{Admission, Mempool, MempoolError};
pub use store::{ChainStore, StoreError};

use crate::digest::Hash32;
use crate::gas::{meter_rate, CostModel, GasReceipt};
use crate::ledger::{LedgerState, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("block {height} does not meet its proof-of-work target")]
    BadPow { height: u64 },
    #[error("block {height} does not link to its parent")]
    BadLinkage { height: u64 },
    #[error("block {height} tx root does not match its transactions")]
    BadTxRoot { height: u64 },
    #[error("block {height}: tx {tx_id} id does not match its body")]
    BadTxId { height: u64, tx_id: Hash32 },
    #[error("block {height}: tx {tx_id} has nonce {nonce}, expected {expected}")]
    BadNonceOrder { height: u64, tx_id: Hash32, nonce: u64, expected: u64 },
    #[error("block {height} builds on {prev_hash}, which is not the tip")]
    Detached { height: u64, prev_hash: Hash32 },
    #[error("first block is not the genesis block")]
    BadGenesis,
    #[error("nothing to mine")]
    NothingToMine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainConfig {
    /// Lowest difficulty a block may declare.
    pub min_difficulty: u32,
    pub cost_model: CostModel,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { min_difficulty: 0, cost_model: CostModel::default_simple() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiningParams {
    pub max_txs: usize,
    pub difficulty: u32,
    pub mined_at: u64,
    /// First header nonce tried.
    pub nonce_seed: u64,
    pub allow_empty: bool,
}

impl MiningParams {
    pub fn new(max_txs: usize, difficulty: u32, mined_at: u64) -> Self {
        Self { max_txs, difficulty, mined_at, nonce_seed: 0, allow_empty: false }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.nonce_seed = seed;
        self
    }

    pub fn allow_empty(mut self) -> Self {
        self.allow_empty = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    config: ChainConfig,
    blocks: Vec<Block>,
    hashes: Vec<Hash32>,
    receipts: Vec<Vec<GasReceipt>>,
    tip_state: LedgerState,
    tip_digest: Hash32,
    nonces: HashMap<UserId, u64>,
    tx_ids: HashSet<Hash32>,
}

impl Chain {
    /// A chain holding only the genesis block.
    pub fn new(config: ChainConfig) -> Self {
        let genesis = Block::genesis();
        let tip_state = LedgerState::new();
        Self {
            config,
            hashes: vec![genesis.hash()],
            blocks: vec![genesis],
            receipts: vec![Vec::new()],
            tip_digest: Hash32(tip_state.state_digest()),
            tip_state,
            nonces: HashMap::new(),
            tx_ids: HashSet::new(),
        }
    }

    /// Rebuilds a chain from a full block sequence, validating every block.
    pub fn from_blocks(config: ChainConfig, blocks: impl IntoIterator<Item = Block>) -> Result<Self, ChainError> {
        let mut blocks = blocks.into_iter();
        if blocks.next().as_ref() != Some(&Block::genesis()) {
            return Err(ChainError::BadGenesis);
        }
        let mut chain = Self::new(config);
        for block in blocks {
            chain.validate_and_append(block).map_err(|e| match e {
                ChainError::Detached { height, .. } => ChainError::BadLinkage { height },
                other => other,
            })?;
        }
        Ok(chain)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_hash(&self, height: u64) -> Option<Hash32> {
        self.hashes.get(height as usize).copied()
    }

    /// Height of the tip; genesis is 0.
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn head_hash(&self) -> Hash32 {
        *self.hashes.last().expect("chain always holds genesis")
    }

    pub fn tip_state(&self) -> &LedgerState {
        &self.tip_state
    }

    pub fn tip_digest(&self) -> Hash32 {
        self.tip_digest
    }

    pub fn receipts(&self, height: u64) -> &[GasReceipt] {
        self.receipts.get(height as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_tx(&self, id: &Hash32) -> bool {
        self.tx_ids.contains(id)
    }

    pub fn contains_block(&self, hash: &Hash32) -> bool {
        self.hashes.contains(hash)
    }

    pub fn tx_count(&self) -> usize {
        self.tx_ids.len()
    }

    pub fn transactions(&self) -> impl Iterator<Item = &Transaction> {
        self.blocks.iter().flat_map(|b| b.txs.iter())
    }

    /// Nonce the next transaction from `user` must carry.
    pub fn next_nonce(&self, user: &UserId) -> u64 {
        self.nonces.get(user).copied().unwrap_or(0)
    }

    /// Checks `block` against the tip and, if valid, applies its
    /// transactions. Returns the gas receipts of the applied transactions.
    pub fn validate_and_append(&mut self, block: Block) -> Result<&[GasReceipt], ChainError> {
        let height = block.height;
        if block.prev_hash != self.head_hash() {
            return Err(ChainError::Detached { height, prev_hash: block.prev_hash });
        }
        if height != self.height() + 1 {
            return Err(ChainError::BadLinkage { height });
        }
        if block.difficulty < self.config.min_difficulty || !block.meets_difficulty() {
            return Err(ChainError::BadPow { height });
        }
        if let Some(tx) = block.txs.iter().find(|t| !t.id_is_valid()) {
            return Err(ChainError::BadTxId { height, tx_id: tx.tx_id });
        }
        if block.computed_tx_root() != block.tx_root {
            return Err(ChainError::BadTxRoot { height });
        }
        let mut advanced: HashMap<&UserId, u64> = HashMap::new();
        for tx in &block.txs {
            let expected = advanced.get(&tx.cred).copied().unwrap_or_else(|| self.next_nonce(&tx.cred));
            if tx.nonce != expected {
                return Err(ChainError::BadNonceOrder { height, tx_id: tx.tx_id, nonce: tx.nonce, expected });
            }
            advanced.insert(&tx.cred, expected + 1);
        }

        let model = &self.config.cost_model;
        let mut receipts = Vec::with_capacity(block.txs.len());
        for tx in &block.txs {
            let outcome = self.tip_state.apply_rate(&tx.cred, &tx.res, tx.vote);
            receipts.push(meter_rate(model, outcome, outcome.storage_touches()));
            self.nonces.insert(tx.cred.clone(), tx.nonce + 1);
            self.tx_ids.insert(tx.tx_id);
        }
        self.tip_digest = Hash32(self.tip_state.state_digest());
        self.hashes.push(block.hash());
        self.blocks.push(block);
        self.receipts.push(receipts);
        Ok(self.receipts.last().expect("just pushed"))
    }

    /// Assembles, solves and appends the next block from the mempool.
    /// Included transactions leave the mempool.
    pub fn mine_block(&mut self, mempool: &mut Mempool, params: &MiningParams) -> Result<Block, ChainError> {
        let txs = mempool.select(self, params.max_txs);
        if txs.is_empty() && !params.allow_empty {
            return Err(ChainError::NothingToMine);
        }
        let mut block = Block::candidate(
            self.height() + 1,
            self.head_hash(),
            params.difficulty.max(self.config.min_difficulty),
            params.mined_at,
            txs,
        );
        block.solve(params.nonce_seed);
        self.validate_and_append(block.clone())?;
        for tx in &block.txs {
            mempool.remove(&tx.tx_id);
        }
        Ok(block)
    }
}

/// Validates `blocks` from genesis and returns the resulting state and digest.
pub fn replay(config: &ChainConfig, blocks: &[Block]) -> Result<(LedgerState, Hash32), ChainError> {
    let chain = Chain::from_blocks(config.clone(), blocks.iter().cloned())?;
    let digest = chain.tip_digest();
    Ok((chain.tip_state, digest))
}
