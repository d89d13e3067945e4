//! Pending transactions, ordered per user by nonce.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cmp::Reverse;

use thiserror::Error;

use super::block::Transaction;
use super::Chain;
use crate::digest::Hash32;
use crate::ledger::UserId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MempoolError {
    #[error("transaction {0} already known")]
    DuplicateTx(Hash32),
    #[error("nonce {nonce} already used; next expected is {expected}")]
    StaleNonce { nonce: u64, expected: u64 },
    #[error("transaction id does not match its body")]
    BadTxId,
}

/// How an accepted transaction was filed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// Continues the user's nonce sequence and can be mined now.
    Ready,
    /// Leaves a nonce gap; held until the missing nonces arrive.
    Queued,
}

#[derive(Debug, Clone, Default)]
pub struct Mempool {
    by_id: HashMap<Hash32, Transaction>,
    by_user: BTreeMap<UserId, BTreeMap<u64, Hash32>>,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn contains(&self, id: &Hash32) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn get(&self, id: &Hash32) -> Option<&Transaction> {
        self.by_id.get(id)
    }

    /// All pending transactions, ordered by user then nonce.
    pub fn pending(&self) -> Vec<&Transaction> {
        self.by_user.values().flat_map(|m| m.values()).map(|id| &self.by_id[id]).collect()
    }

    /// Next nonce a new transaction from `user` should carry: one past the
    /// end of the contiguous run starting at the chain's expected nonce.
    pub fn next_nonce(&self, chain: &Chain, user: &UserId) -> u64 {
        let mut next = chain.next_nonce(user);
        if let Some(queue) = self.by_user.get(user) {
            while queue.contains_key(&next) {
                next += 1;
            }
        }
        next
    }

    pub fn submit(&mut self, chain: &Chain, tx: Transaction) -> Result<Admission, MempoolError> {
        if !tx.id_is_valid() {
            return Err(MempoolError::BadTxId);
        }
        if self.by_id.contains_key(&tx.tx_id) || chain.contains_tx(&tx.tx_id) {
            return Err(MempoolError::DuplicateTx(tx.tx_id));
        }
        let expected = chain.next_nonce(&tx.cred);
        if tx.nonce < expected {
            return Err(MempoolError::StaleNonce { nonce: tx.nonce, expected });
        }
        if let Some(taken) = self.by_user.get(&tx.cred).and_then(|q| q.get(&tx.nonce)) {
            return Err(MempoolError::DuplicateTx(*taken));
        }
        let ready_until = self.next_nonce(chain, &tx.cred);
        let admission = if tx.nonce == ready_until { Admission::Ready } else { Admission::Queued };
        self.by_user.entry(tx.cred.clone()).or_default().insert(tx.nonce, tx.tx_id);
        self.by_id.insert(tx.tx_id, tx);
        Ok(admission)
    }

    /// Transactions that could be mined on top of `chain` right now.
    pub fn ready_count(&self, chain: &Chain) -> usize {
        self.by_user
            .keys()
            .map(|u| (self.next_nonce(chain, u) - chain.next_nonce(u)) as usize)
            .sum()
    }

    /// Up to `max` minable transactions in a deterministic order: the
    /// earliest submitted head among all users' runs goes first, ties broken
    /// by tx id, and each user's nonces stay in sequence.
    pub fn select(&self, chain: &Chain, max: usize) -> Vec<Transaction> {
        let mut heads = BinaryHeap::new();
        for (user, queue) in &self.by_user {
            let expected = chain.next_nonce(user);
            if let Some(id) = queue.get(&expected) {
                let tx = &self.by_id[id];
                heads.push(Reverse((tx.submitted_at, tx.tx_id, user, expected)));
            }
        }
        let mut out = Vec::new();
        while out.len() < max {
            let Some(Reverse((_, id, user, nonce))) = heads.pop() else { break };
            out.push(self.by_id[&id].clone());
            if let Some(next_id) = self.by_user[user].get(&(nonce + 1)) {
                let tx = &self.by_id[next_id];
                heads.push(Reverse((tx.submitted_at, tx.tx_id, user, nonce + 1)));
            }
        }
        out
    }

    pub fn remove(&mut self, id: &Hash32) -> Option<Transaction> {
        let tx = self.by_id.remove(id)?;
        if let Some(queue) = self.by_user.get_mut(&tx.cred) {
            queue.remove(&tx.nonce);
            if queue.is_empty() {
                self.by_user.remove(&tx.cred);
            }
        }
        Some(tx)
    }

    /// Drops everything the chain already contains or has made stale.
    pub fn prune(&mut self, chain: &Chain) {
        let dead: Vec<Hash32> = self
            .by_id
            .values()
            .filter(|tx| chain.contains_tx(&tx.tx_id) || tx.nonce < chain.next_nonce(&tx.cred))
            .map(|tx| tx.tx_id)
            .collect();
        for id in dead {
            self.remove(&id);
        }
    }

    /// Re-admits transactions after the chain underneath changed, e.g. on a
    /// fork switch. Returns how many were accepted.
    pub fn reinject(&mut self, chain: &Chain, txs: impl IntoIterator<Item = Transaction>) -> usize {
        self.prune(chain);
        let mut txs: Vec<Transaction> = txs.into_iter().collect();
        txs.sort_by(|a, b| (&a.cred, a.nonce).cmp(&(&b.cred, b.nonce)));
        txs.into_iter().filter(|tx| self.submit(chain, tx.clone()).is_ok()).count()
    }
}
