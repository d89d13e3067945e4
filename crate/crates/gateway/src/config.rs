//! Node configuration and service assembly.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};

use rating_core::gas::{Calibration, OracleMode};
use rating_core::identity::{
    Clock, IdentityHasher, IdentityService, ProviderConfig, StubFixtures, SystemClock, DEFAULT_SESSION_TTL_SECS,
};
use rating_core::validation::{NoProbe, ProviderRegistry, ResourceProbe};

use crate::http_probe::HttpProbe;
use crate::oauth::OAuthProvider;
use crate::service::{NodeSettings, RatingService};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_CHAIN_FILE: &str = "./data/chain.jsonl";
pub const DEFAULT_FIXTURES: &str = include_str!("../fixtures/stub_accounts.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AuthMode {
    /// Accounts from a fixture file.
    Stub,
    /// Live OAuth providers configured through `RATING_<NAME>_*`.
    Oauth,
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub listen: SocketAddr,
    /// `None` keeps the chain in memory.
    pub chain_file: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub oracle_mode: OracleMode,
    pub registry: Option<PathBuf>,
    pub auth_mode: AuthMode,
    pub fixtures: Option<PathBuf>,
    pub oauth_providers: Vec<String>,
    pub hasher: IdentityHasher,
    pub session_ttl_secs: u64,
    pub auto_mine: bool,
    pub difficulty: u32,
    pub max_txs: usize,
    pub dev_mode: bool,
    pub cors_origins: Vec<String>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            chain_file: Some(PathBuf::from(DEFAULT_CHAIN_FILE)),
            calibration: None,
            oracle_mode: OracleMode::None,
            registry: None,
            auth_mode: AuthMode::Stub,
            fixtures: None,
            oauth_providers: vec!["google".into(), "github".into(), "spotify".into()],
            hasher: IdentityHasher::Md5,
            session_ttl_secs: DEFAULT_SESSION_TTL_SECS,
            auto_mine: true,
            difficulty: 8,
            max_txs: 64,
            dev_mode: false,
            cors_origins: Vec::new(),
        }
    }
}

impl GatewayConfig {
    pub fn build(&self) -> anyhow::Result<RatingService> {
        self.build_with(Arc::new(SystemClock), None)
    }

    /// Assembles the service; `probe` overrides the one picked from the
    /// registry's `probe` flag.
    pub fn build_with(&self, clock: Arc<dyn Clock>, probe: Option<Arc<dyn ResourceProbe>>) -> anyhow::Result<RatingService> {
        let calibration = match &self.calibration {
            Some(path) => Calibration::load(path).with_context(|| format!("loading calibration {}", path.display()))?,
            None => Calibration::default_shipped(),
        };
        let cost_model = calibration.model(self.oracle_mode)?;

        let registry = match &self.registry {
            Some(path) => ProviderRegistry::load(path).with_context(|| format!("loading registry {}", path.display()))?,
            None => ProviderRegistry::default_shipped(),
        };
        let probe = probe.unwrap_or_else(|| {
            if registry.probe {
                Arc::new(HttpProbe::default()) as Arc<dyn ResourceProbe>
            } else {
                Arc::new(NoProbe)
            }
        });

        let identity = match self.auth_mode {
            AuthMode::Stub => {
                let fixtures = match &self.fixtures {
                    Some(path) => StubFixtures::load(path)?,
                    None => StubFixtures::parse(DEFAULT_FIXTURES)?,
                };
                IdentityService::from_fixtures(&fixtures, clock.clone())?
            }
            AuthMode::Oauth => {
                let mut service = IdentityService::new(clock.clone());
                for name in &self.oauth_providers {
                    match ProviderConfig::from_env(name) {
                        Some(cfg) => service.register(name, Arc::new(OAuthProvider::new(cfg)))?,
                        None => tracing::warn!(provider = %name, "no client settings, provider disabled"),
                    }
                }
                if service.provider_names().next().is_none() {
                    bail!("oauth mode needs at least one provider with RATING_<NAME>_CLIENT_ID set");
                }
                service
            }
        };
        let identity = identity.with_session_ttl(self.session_ttl_secs).with_hasher(self.hasher);

        let settings = NodeSettings {
            chain_file: self.chain_file.clone(),
            cost_model,
            difficulty: self.difficulty,
            max_txs: self.max_txs,
            auto_mine: self.auto_mine,
            dev_mode: self.dev_mode,
            cors_origins: self.cors_origins.clone(),
        };
        RatingService::new(settings, identity, registry, probe, clock)
    }
}
