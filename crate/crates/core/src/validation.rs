//! Checks run before a rating is turned into a transaction: where the
//! resource comes from, and whether the user already cast this exact vote.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::ledger::{LedgerState, ResourceId, UserId, Vote};

pub const INVALID_RESOURCE_MESSAGE: &str = "Invalid resource.";
pub const DUPLICATE_RATING_MESSAGE: &str = "Multiple ratings for the same resource are not allowed.";

/// Registry shipped with the crate.
pub const DEFAULT_REGISTRY: &str = include_str!("../calibration/registry.toml");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("Invalid resource.")]
    InvalidResource,
    #[error("Multiple ratings for the same resource are not allowed.")]
    DuplicateRating,
    #[error("registry: {0}")]
    Registry(String),
}

impl ValidationError {
    /// Text shown to the user.
    pub fn user_message(&self) -> &'static str {
        match self {
            Self::InvalidResource => INVALID_RESOURCE_MESSAGE,
            Self::DuplicateRating => DUPLICATE_RATING_MESSAGE,
            Self::Registry(_) => "Registry misconfigured.",
        }
    }
}

/// Answer of a resource existence probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeResponse {
    Exists,
    NotFound,
    Unreachable,
}

pub trait ResourceProbe: Send + Sync {
    fn probe(&self, resource: &ResourceId) -> ProbeResponse;
}

/// Probe that accepts everything, for registries with probing disabled.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoProbe;

impl ResourceProbe for NoProbe {
    fn probe(&self, _: &ResourceId) -> ProbeResponse {
        ProbeResponse::Exists
    }
}

impl<F: Fn(&ResourceId) -> ProbeResponse + Send + Sync> ResourceProbe for F {
    fn probe(&self, resource: &ResourceId) -> ProbeResponse {
        self(resource)
    }
}

/// A host pattern: either an exact host, or `*.suffix` matching the suffix
/// itself and any subdomain of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostPattern(String);

impl HostPattern {
    pub fn new(pattern: &str) -> Result<Self, ValidationError> {
        let p = pattern.trim().to_ascii_lowercase();
        let body = p.strip_prefix("*.").unwrap_or(&p);
        if body.is_empty() || body.contains(['*', '/', ':']) {
            return Err(ValidationError::Registry(format!("bad host pattern {pattern:?}")));
        }
        Ok(Self(p))
    }

    pub fn matches(&self, host: &str) -> bool {
        match self.0.strip_prefix("*.") {
            Some(suffix) => host == suffix || host.strip_suffix(suffix).is_some_and(|rest| rest.ends_with('.')),
            None => host == self.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderRegistry {
    /// Ask the probe whether the resource exists before accepting it.
    #[serde(default)]
    pub probe: bool,
    pub providers: BTreeMap<String, Vec<HostPattern>>,
}

impl ProviderRegistry {
    pub fn new(probe: bool) -> Self {
        Self { probe, providers: BTreeMap::new() }
    }

    pub fn with_provider(mut self, name: &str, patterns: &[&str]) -> Result<Self, ValidationError> {
        let patterns = patterns.iter().map(|p| HostPattern::new(p)).collect::<Result<Vec<_>, _>>()?;
        self.providers.insert(name.to_string(), patterns);
        self.check()?;
        Ok(self)
    }

    pub fn default_shipped() -> Self {
        Self::parse(DEFAULT_REGISTRY).expect("shipped registry parses")
    }

    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        let raw: ProviderRegistry = toml::from_str(text).map_err(|e| ValidationError::Registry(e.to_string()))?;
        let mut out = ProviderRegistry::new(raw.probe);
        for (name, patterns) in raw.providers {
            let patterns = patterns.iter().map(|p| HostPattern::new(&p.0)).collect::<Result<Vec<_>, _>>()?;
            out.providers.insert(name, patterns);
        }
        out.check()?;
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path).map_err(|e| ValidationError::Registry(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<(), ValidationError> {
        match self.providers.iter().find(|(_, p)| p.is_empty()) {
            Some((name, _)) => Err(ValidationError::Registry(format!("provider {name:?} has no host patterns"))),
            None => Ok(()),
        }
    }

    /// Provider whose patterns match `host`, if any.
    pub fn provider_for(&self, host: &str) -> Option<&str> {
        self.providers
            .iter()
            .find(|(_, patterns)| patterns.iter().any(|p| p.matches(host)))
            .map(|(name, _)| name.as_str())
    }
}

/// Canonicalizes `raw_url` and accepts it only if its host belongs to a
/// registered provider and, with probing on, the probe confirms it exists.
/// Unreachable probes fail closed.
pub fn validate_resource(
    registry: &ProviderRegistry,
    raw_url: &str,
    probe: &dyn ResourceProbe,
) -> Result<ResourceId, ValidationError> {
    let url = Url::parse(raw_url.trim()).map_err(|_| ValidationError::InvalidResource)?;
    let resource = ResourceId::from_url(&url).ok_or(ValidationError::InvalidResource)?;
    registry.provider_for(resource.host()).ok_or(ValidationError::InvalidResource)?;
    if registry.probe && probe.probe(&resource) != ProbeResponse::Exists {
        return Err(ValidationError::InvalidResource);
    }
    Ok(resource)
}

/// Denies exactly the ratings the contract would treat as a no-op.
pub fn check_history(state: &LedgerState, user: &UserId, res: &ResourceId, vote: Vote) -> Result<(), ValidationError> {
    if state.has_rated(user, res) && state.stored_vote(user, res) == vote {
        Err(ValidationError::DuplicateRating)
    } else {
        Ok(())
    }
}
