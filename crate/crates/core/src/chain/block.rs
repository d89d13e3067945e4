use serde::{Deserialize, Serialize};

use crate::digest::Hash32;
use crate::ledger::{ResourceId, UserId, Vote};

const TX_TAG: &[u8] = b"rating-tx/v1";
const HEADER_TAG: &[u8] = b"rating-block/v1";

/// A call to `rate`, as carried on chain. Only the hashed user id is present.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: Hash32,
    pub cred: UserId,
    pub res: ResourceId,
    pub vote: Vote,
    pub nonce: u64,
    pub submitted_at: u64,
}

impl Transaction {
    pub fn new(cred: UserId, res: ResourceId, vote: Vote, nonce: u64, submitted_at: u64) -> Self {
        let tx_id = Self::digest_body(&cred, &res, vote, nonce, submitted_at);
        Self { tx_id, cred, res, vote, nonce, submitted_at }
    }

    fn digest_body(cred: &UserId, res: &ResourceId, vote: Vote, nonce: u64, submitted_at: u64) -> Hash32 {
        let mut body = Vec::with_capacity(TX_TAG.len() + 64 + res.as_str().len());
        body.extend_from_slice(TX_TAG);
        body.extend_from_slice(cred.as_str().as_bytes());
        body.extend_from_slice(&(res.as_str().len() as u64).to_be_bytes());
        body.extend_from_slice(res.as_str().as_bytes());
        body.push(vote.0 as u8);
        body.extend_from_slice(&nonce.to_be_bytes());
        body.extend_from_slice(&submitted_at.to_be_bytes());
        Hash32::of(&body)
    }

    /// Digest of the body as currently stored.
    pub fn body_digest(&self) -> Hash32 {
        Self::digest_body(&self.cred, &self.res, self.vote, self.nonce, self.submitted_at)
    }

    pub fn id_is_valid(&self) -> bool {
        self.tx_id == self.body_digest()
    }
}

/// Binary Merkle root over ordered tx ids. An odd node is paired with itself;
/// the empty list has the all-zero root.
pub fn tx_root(ids: impl IntoIterator<Item = Hash32>) -> Hash32 {
    let mut level: Vec<Hash32> = ids
        .into_iter()
        .map(|id| {
            let mut buf = [0u8; 33];
            buf[1..].copy_from_slice(id.as_bytes());
            Hash32::of(&buf)
        })
        .collect();
    if level.is_empty() {
        return Hash32::ZERO;
    }
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                let mut buf = [0u8; 65];
                buf[0] = 1;
                buf[1..33].copy_from_slice(pair[0].as_bytes());
                buf[33..].copy_from_slice(right.as_bytes());
                Hash32::of(&buf)
            })
            .collect();
    }
    level[0]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Hash32,
    pub tx_root: Hash32,
    pub pow_nonce: u64,
    pub difficulty: u32,
    pub mined_at: u64,
    pub txs: Vec<Transaction>,
}

impl Block {
    pub fn genesis() -> Self {
        Self {
            height: 0,
            prev_hash: Hash32::ZERO,
            tx_root: Hash32::ZERO,
            pow_nonce: 0,
            difficulty: 0,
            mined_at: 0,
            txs: Vec::new(),
        }
    }

    /// Unsolved block with the root computed from `txs`.
    pub fn candidate(height: u64, prev_hash: Hash32, difficulty: u32, mined_at: u64, txs: Vec<Transaction>) -> Self {
        Self {
            height,
            prev_hash,
            tx_root: tx_root(txs.iter().map(|t| t.tx_id)),
            pow_nonce: 0,
            difficulty,
            mined_at,
            txs,
        }
    }

    pub fn header_bytes(&self) -> [u8; 15 + 8 + 32 + 32 + 8 + 4 + 8] {
        let mut out = [0u8; 15 + 8 + 32 + 32 + 8 + 4 + 8];
        let mut at = 0;
        let mut put = |bytes: &[u8]| {
            out[at..at + bytes.len()].copy_from_slice(bytes);
            at += bytes.len();
        };
        put(HEADER_TAG);
        put(&self.height.to_be_bytes());
        put(self.prev_hash.as_bytes());
        put(self.tx_root.as_bytes());
        put(&self.pow_nonce.to_be_bytes());
        put(&self.difficulty.to_be_bytes());
        put(&self.mined_at.to_be_bytes());
        out
    }

    pub fn hash(&self) -> Hash32 {
        Hash32::of(&self.header_bytes())
    }

    pub fn meets_difficulty(&self) -> bool {
        self.hash().leading_zero_bits() >= self.difficulty
    }

    pub fn computed_tx_root(&self) -> Hash32 {
        tx_root(self.txs.iter().map(|t| t.tx_id))
    }

    /// Searches nonces from `start` (wrapping) until the header meets its
    /// difficulty. Returns the number of headers hashed.
    pub fn solve(&mut self, start: u64) -> u64 {
        let mut attempts = 0;
        self.pow_nonce = start;
        loop {
            attempts += 1;
            if self.meets_difficulty() {
                return attempts;
            }
            self.pow_nonce = self.pow_nonce.wrapping_add(1);
        }
    }
}
