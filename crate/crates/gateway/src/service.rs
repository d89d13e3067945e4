//! The rating workflow behind the HTTP API: authenticate, validate, submit,
//! mine, read back.
//!
//! All chain mutations go through one mutex-guarded node; reads copy what
//! they need under the same lock so every response reflects a single tip.

use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use rating_core::chain::{Block, Chain, ChainConfig, ChainStore, Mempool, MiningParams, Transaction};
use rating_core::gas::{meter_rate, CostModel, GasReceipt};
use rating_core::identity::{Clock, IdentityService};
use rating_core::validation::{check_history, validate_resource, ProviderRegistry, ResourceProbe};
use rating_core::{Hash32, ResourceId, UserId, Vote};

use crate::error::ApiError;

#[derive(Debug, Clone)]
pub struct NodeSettings {
    /// Append-only block file; `None` keeps the chain in memory.
    pub chain_file: Option<PathBuf>,
    pub cost_model: CostModel,
    pub difficulty: u32,
    pub max_txs: usize,
    /// Mine a block right after each accepted rating.
    pub auto_mine: bool,
    /// Enables `POST /admin/mine`.
    pub dev_mode: bool,
    /// Browser origins allowed to call the API; `*` allows any.
    pub cors_origins: Vec<String>,
}

impl Default for NodeSettings {
    fn default() -> Self {
        Self {
            chain_file: None,
            cost_model: CostModel::default_simple(),
            difficulty: 8,
            max_txs: 64,
            auto_mine: true,
            dev_mode: true,
            cors_origins: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthRequest {
    pub provider: String,
    pub credential: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthResponse {
    pub session_token: String,
    pub user_id: UserId,
    pub expires_at: u64,
}

/// `true`/`false` or `"like"`/`"dislike"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VoteInput {
    Flag(bool),
    Word(VoteWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteWord {
    Like,
    Dislike,
}

impl From<VoteInput> for Vote {
    fn from(v: VoteInput) -> Self {
        match v {
            VoteInput::Flag(b) => Vote(b),
            VoteInput::Word(VoteWord::Like) => Vote::LIKE,
            VoteInput::Word(VoteWord::Dislike) => Vote::DISLIKE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateRequest {
    pub url: String,
    pub vote: VoteInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatus {
    /// Dry run: nothing was submitted.
    Estimate,
    Pending,
    Mined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateResponse {
    pub status: RateStatus,
    pub tx_id: Option<Hash32>,
    pub resource: ResourceId,
    pub block_height: Option<u64>,
    pub gas_receipt: GasReceipt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub resource: ResourceId,
    pub likes: u64,
    pub dislikes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub resource: ResourceId,
    /// `true` for a like.
    pub vote: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub height: u64,
    pub hash: Hash32,
    pub prev_hash: Hash32,
    pub tx_root: Hash32,
    pub tx_count: usize,
    pub difficulty: u32,
    pub mined_at: u64,
    pub gas_used: u64,
}

/// A read result with the state digest of the tip it was taken from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot<T> {
    pub value: T,
    pub state_digest: Hash32,
}

struct NodeState {
    chain: Chain,
    mempool: Mempool,
    store: Option<ChainStore>,
}

impl NodeState {
    fn mine(&mut self, settings: &NodeSettings, now: u64, allow_empty: bool) -> Result<Block, ApiError> {
        let height = self.chain.height() + 1;
        let mut params = MiningParams::new(settings.max_txs, settings.difficulty, now).with_seed(height << 32);
        if allow_empty {
            params = params.allow_empty();
        }
        let block = self.chain.mine_block(&mut self.mempool, &params).map_err(|e| ApiError::internal(e.to_string()))?;
        if let Some(store) = &mut self.store {
            store.append(&block).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        Ok(block)
    }
}

pub struct RatingService {
    settings: NodeSettings,
    identity: IdentityService,
    registry: ProviderRegistry,
    probe: Arc<dyn ResourceProbe>,
    clock: Arc<dyn Clock>,
    node: Mutex<NodeState>,
}

impl RatingService {
    pub fn new(
        settings: NodeSettings,
        identity: IdentityService,
        registry: ProviderRegistry,
        probe: Arc<dyn ResourceProbe>,
        clock: Arc<dyn Clock>,
    ) -> anyhow::Result<Self> {
        let config = ChainConfig { min_difficulty: 0, cost_model: settings.cost_model.clone() };
        let (chain, store) = match &settings.chain_file {
            Some(path) => {
                let (store, chain) = ChainStore::open(path, config)?;
                (chain, Some(store))
            }
            None => (Chain::new(config), None),
        };
        Ok(Self {
            settings,
            identity,
            registry,
            probe,
            clock,
            node: Mutex::new(NodeState { chain, mempool: Mempool::new(), store }),
        })
    }

    pub fn settings(&self) -> &NodeSettings {
        &self.settings
    }

    pub fn identity(&self) -> &IdentityService {
        &self.identity
    }

    pub fn authenticate(&self, req: &AuthRequest) -> Result<AuthResponse, ApiError> {
        let session = self.identity.authenticate(&req.provider, &req.credential)?;
        Ok(AuthResponse { session_token: session.session_token, user_id: session.user_id, expires_at: session.expires_at })
    }

    fn user_for(&self, token: Option<&str>) -> Result<UserId, ApiError> {
        let token = token.ok_or_else(|| ApiError::unauthorized("Authentication required."))?;
        Ok(self.identity.resolve_session(token)?.user_id)
    }

    /// Validates and submits a rating; with `estimate_only` just prices it.
    pub fn rate(&self, token: Option<&str>, req: &RateRequest, estimate_only: bool) -> Result<RateResponse, ApiError> {
        let user = self.user_for(token)?;
        let resource = validate_resource(&self.registry, &req.url, self.probe.as_ref())?;
        let vote = Vote::from(req.vote);
        let now = self.clock.now();

        let mut node = self.node.lock();
        check_history(node.chain.tip_state(), &user, &resource, vote)?;
        let branch = node.chain.tip_state().classify(&user, &resource, vote);
        let gas_receipt = meter_rate(&self.settings.cost_model, branch, branch.storage_touches());
        if estimate_only {
            return Ok(RateResponse { status: RateStatus::Estimate, tx_id: None, resource, block_height: None, gas_receipt });
        }

        let nonce = node.mempool.next_nonce(&node.chain, &user);
        let tx = Transaction::new(user, resource.clone(), vote, nonce, now);
        let tx_id = tx.tx_id;
        let NodeState { chain, mempool, .. } = &mut *node;
        mempool.submit(chain, tx).map_err(|e| ApiError::internal(e.to_string()))?;

        let mut status = RateStatus::Pending;
        let mut block_height = None;
        if self.settings.auto_mine {
            let block = node.mine(&self.settings, now, false)?;
            status = RateStatus::Mined;
            block_height = Some(block.height);
        }
        Ok(RateResponse { status, tx_id: Some(tx_id), resource, block_height, gas_receipt })
    }

    pub fn resources(&self, offset: usize, limit: Option<usize>) -> Snapshot<Vec<ResourceRow>> {
        let node = self.node.lock();
        let state = node.chain.tip_state();
        let total = state.get_number_of_rated_resources();
        let end = limit.map_or(total, |l| offset.saturating_add(l).min(total));
        let value = (offset.min(total)..end)
            .map(|i| {
                let resource = state.get_rated_resource(i).expect("index below count").clone();
                let counts = state.get_resource_information(&resource);
                ResourceRow { resource, likes: counts.likes, dislikes: counts.dislikes }
            })
            .collect();
        Snapshot { value, state_digest: node.chain.tip_digest() }
    }

    pub fn resource(&self, raw: &str) -> Result<Snapshot<ResourceRow>, ApiError> {
        let resource = ResourceId::parse(raw).map_err(|_| ApiError::not_found("No such resource id."))?;
        let node = self.node.lock();
        let counts = node.chain.tip_state().get_resource_information(&resource);
        Ok(Snapshot {
            value: ResourceRow { resource, likes: counts.likes, dislikes: counts.dislikes },
            state_digest: node.chain.tip_digest(),
        })
    }

    pub fn history(&self, raw_user: &str) -> Result<Snapshot<Vec<HistoryRow>>, ApiError> {
        let user = UserId::parse(raw_user).map_err(|_| ApiError::not_found("No such user id."))?;
        let node = self.node.lock();
        let value = node
            .chain
            .tip_state()
            .history_of(&user)
            .into_iter()
            .map(|(resource, vote)| HistoryRow { resource, vote: vote.is_like() })
            .collect();
        Ok(Snapshot { value, state_digest: node.chain.tip_digest() })
    }

    pub fn blocks(&self) -> Snapshot<Vec<BlockSummary>> {
        let node = self.node.lock();
        let chain = &node.chain;
        let value = chain
            .blocks()
            .iter()
            .map(|b| summarize(chain, b))
            .collect();
        Snapshot { value, state_digest: chain.tip_digest() }
    }

    /// Mines whatever is pending, or an empty block. Dev mode only.
    pub fn mine_now(&self) -> Result<BlockSummary, ApiError> {
        if !self.settings.dev_mode {
            return Err(ApiError::not_found("Mining endpoint is disabled."));
        }
        let now = self.clock.now();
        let mut node = self.node.lock();
        let block = node.mine(&self.settings, now, true)?;
        Ok(summarize(&node.chain, &block))
    }

    pub fn pending_count(&self) -> usize {
        self.node.lock().mempool.len()
    }

    pub fn tip_digest(&self) -> Hash32 {
        self.node.lock().chain.tip_digest()
    }

    pub fn height(&self) -> u64 {
        self.node.lock().chain.height()
    }
}

fn summarize(chain: &Chain, block: &Block) -> BlockSummary {
    BlockSummary {
        height: block.height,
        hash: block.hash(),
        prev_hash: block.prev_hash,
        tx_root: block.tx_root,
        tx_count: block.txs.len(),
        difficulty: block.difficulty,
        mined_at: block.mined_at,
        gas_used: chain.receipts(block.height).iter().map(|r| r.gas_used).sum(),
    }
}
