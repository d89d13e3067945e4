//! Provider-delegated authentication and hashed user identities.
//!
//! Users prove an account with an external provider; the platform only ever
//! records the hash of `provider:account_id`. The default hash is md5 for
//! compatibility with the original contract. md5 is not collision resistant,
//! so [`IdentityHasher::Sha256Truncated`] is available as a drop-in of the
//! same width.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use md5::{Digest as _, Md5};
use parking_lot::RwLock;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::ledger::UserId;

pub const DEFAULT_SESSION_TTL_SECS: u64 = 24 * 60 * 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("unknown provider {0:?}")]
    UnknownProvider(String),
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("provider and account id must be non-empty")]
    EmptyInput,
    #[error("unknown session")]
    UnknownSession,
    #[error("session expired")]
    ExpiredSession,
    #[error("provider {0:?} is already registered")]
    DuplicateProvider(String),
    #[error("provider names must be lowercase ascii, got {0:?}")]
    BadProviderName(String),
    #[error("provider request failed: {0}")]
    Provider(String),
    #[error("fixtures: {0}")]
    Fixtures(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityHasher {
    #[default]
    Md5,
    /// First 16 bytes of SHA-256.
    Sha256Truncated,
}

impl IdentityHasher {
    pub fn hash(self, provider: &str, account_id: &str) -> Result<UserId, IdentityError> {
        if provider.is_empty() || account_id.is_empty() {
            return Err(IdentityError::EmptyInput);
        }
        let preimage = format!("{provider}:{account_id}");
        let hex = match self {
            Self::Md5 => hex::encode(Md5::digest(preimage.as_bytes())),
            Self::Sha256Truncated => hex::encode(&Sha256::digest(preimage.as_bytes())[..16]),
        };
        Ok(UserId::parse(hex).expect("16-byte digest encodes to 32 hex chars"))
    }
}

/// md5 hex of `provider:account_id`.
pub fn hash_identity(provider: &str, account_id: &str) -> Result<UserId, IdentityError> {
    IdentityHasher::Md5.hash(provider, account_id)
}

/// Confirms a credential with one provider and reports the account it
/// belongs to.
pub trait ProviderClient: Send + Sync {
    fn verify(&self, credential: &str) -> Result<String, IdentityError>;
}

/// Fixture-backed provider: a fixed table of credential → account id.
#[derive(Debug, Clone, Default)]
pub struct StubProvider {
    accounts: HashMap<String, String>,
}

impl StubProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_account(mut self, account_id: impl Into<String>, credential: impl Into<String>) -> Self {
        self.accounts.insert(credential.into(), account_id.into());
        self
    }
}

impl ProviderClient for StubProvider {
    fn verify(&self, credential: &str) -> Result<String, IdentityError> {
        self.accounts.get(credential).cloned().ok_or(IdentityError::InvalidCredentials)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureAccount {
    pub provider: String,
    pub account_id: String,
    pub credential: String,
}

/// Stub fixture file: a list of `[[account]]` tables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubFixtures {
    #[serde(default, rename = "account")]
    pub accounts: Vec<FixtureAccount>,
}

impl StubFixtures {
    pub fn parse(text: &str) -> Result<Self, IdentityError> {
        toml::from_str(text).map_err(|e| IdentityError::Fixtures(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IdentityError> {
        let text = std::fs::read_to_string(path).map_err(|e| IdentityError::Fixtures(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// One stub provider per provider named in the fixtures.
    pub fn providers(&self) -> BTreeMap<String, StubProvider> {
        let mut out: BTreeMap<String, StubProvider> = BTreeMap::new();
        for a in &self.accounts {
            let stub = out.entry(a.provider.clone()).or_default();
            stub.accounts.insert(a.credential.clone(), a.account_id.clone());
        }
        out
    }
}

/// OAuth client settings for a live provider.
#[derive(Clone, PartialEq, Eq)]
pub struct ProviderConfig {
    pub name: String,
    pub client_id: String,
    pub client_secret: String,
    pub callback_url: String,
    pub token_url: String,
    pub userinfo_url: String,
    /// JSON field of the userinfo response holding the account id.
    pub account_field: String,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("name", &self.name)
            .field("client_id", &self.client_id)
            .field("client_secret", &"<redacted>")
            .field("callback_url", &self.callback_url)
            .finish_non_exhaustive()
    }
}

impl ProviderConfig {
    /// Endpoints of the built-in providers: token URL, userinfo URL and the
    /// account id field.
    pub fn known_endpoints(name: &str) -> Option<(&'static str, &'static str, &'static str)> {
        match name {
            "google" => Some(("https://oauth2.googleapis.com/token", "https://openidconnect.googleapis.com/v1/userinfo", "sub")),
            "github" => Some(("https://github.com/login/oauth/access_token", "https://api.github.com/user", "id")),
            "spotify" => Some(("https://accounts.spotify.com/api/token", "https://api.spotify.com/v1/me", "id")),
            _ => None,
        }
    }

    /// Reads `RATING_<NAME>_CLIENT_ID`, `_CLIENT_SECRET` and `_CALLBACK_URL`,
    /// plus `_TOKEN_URL`, `_USERINFO_URL` and `_ACCOUNT_FIELD` for providers
    /// without built-in endpoints. `None` when the client id is unset.
    pub fn from_env(name: &str) -> Option<Self> {
        Self::from_lookup(name, |key| std::env::var(key).ok())
    }

    pub fn from_lookup(name: &str, lookup: impl Fn(&str) -> Option<String>) -> Option<Self> {
        let prefix = format!("RATING_{}", name.to_ascii_uppercase());
        let get = |suffix: &str| lookup(&format!("{prefix}_{suffix}")).filter(|v| !v.is_empty());
        let client_id = get("CLIENT_ID")?;
        let known = Self::known_endpoints(name);
        Some(Self {
            name: name.to_string(),
            client_id,
            client_secret: get("CLIENT_SECRET")?,
            callback_url: get("CALLBACK_URL")?,
            token_url: get("TOKEN_URL").or_else(|| known.map(|k| k.0.to_string()))?,
            userinfo_url: get("USERINFO_URL").or_else(|| known.map(|k| k.1.to_string()))?,
            account_field: get("ACCOUNT_FIELD").or_else(|| known.map(|k| k.2.to_string()))?,
        })
    }
}

pub trait Clock: Send + Sync {
    /// Unix seconds.
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        Self(AtomicU64::new(start))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct AuthSession {
    pub session_token: String,
    pub provider: String,
    /// Provider-scoped account id. Never leaves the identity layer.
    #[serde(skip)]
    pub account_id: String,
    pub user_id: UserId,
    pub expires_at: u64,
}

impl fmt::Debug for AuthSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuthSession")
            .field("provider", &self.provider)
            .field("user_id", &self.user_id)
            .field("expires_at", &self.expires_at)
            .finish_non_exhaustive()
    }
}

pub struct IdentityService {
    providers: BTreeMap<String, Arc<dyn ProviderClient>>,
    sessions: RwLock<HashMap<String, AuthSession>>,
    session_ttl: u64,
    hasher: IdentityHasher,
    clock: Arc<dyn Clock>,
}

impl IdentityService {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            providers: BTreeMap::new(),
            sessions: RwLock::new(HashMap::new()),
            session_ttl: DEFAULT_SESSION_TTL_SECS,
            hasher: IdentityHasher::default(),
            clock,
        }
    }

    pub fn with_session_ttl(mut self, secs: u64) -> Self {
        self.session_ttl = secs.max(1);
        self
    }

    pub fn with_hasher(mut self, hasher: IdentityHasher) -> Self {
        self.hasher = hasher;
        self
    }

    pub fn register(&mut self, name: &str, client: Arc<dyn ProviderClient>) -> Result<(), IdentityError> {
        let valid = !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-');
        if !valid {
            return Err(IdentityError::BadProviderName(name.to_string()));
        }
        if self.providers.contains_key(name) {
            return Err(IdentityError::DuplicateProvider(name.to_string()));
        }
        self.providers.insert(name.to_string(), client);
        Ok(())
    }

    pub fn from_fixtures(fixtures: &StubFixtures, clock: Arc<dyn Clock>) -> Result<Self, IdentityError> {
        let mut service = Self::new(clock);
        for (name, stub) in fixtures.providers() {
            service.register(&name, Arc::new(stub))?;
        }
        Ok(service)
    }

    pub fn provider_names(&self) -> impl Iterator<Item = &str> {
        self.providers.keys().map(String::as_str)
    }

    pub fn hasher(&self) -> IdentityHasher {
        self.hasher
    }

    pub fn authenticate(&self, provider: &str, credential: &str) -> Result<AuthSession, IdentityError> {
        let client = self
            .providers
            .get(provider)
            .ok_or_else(|| IdentityError::UnknownProvider(provider.to_string()))?;
        let account_id = client.verify(credential)?;
        if account_id.is_empty() {
            return Err(IdentityError::InvalidCredentials);
        }
        let user_id = self.hasher.hash(provider, &account_id)?;
        let session = AuthSession {
            session_token: new_session_token(),
            provider: provider.to_string(),
            account_id,
            user_id,
            expires_at: self.clock.now() + self.session_ttl,
        };
        self.sessions.write().insert(session.session_token.clone(), session.clone());
        Ok(session)
    }

    pub fn resolve_session(&self, token: &str) -> Result<AuthSession, IdentityError> {
        let now = self.clock.now();
        let session = self.sessions.read().get(token).cloned().ok_or(IdentityError::UnknownSession)?;
        if now >= session.expires_at {
            self.sessions.write().remove(token);
            return Err(IdentityError::ExpiredSession);
        }
        Ok(session)
    }

    pub fn revoke(&self, token: &str) -> bool {
        self.sessions.write().remove(token).is_some()
    }

    /// Drops expired sessions; returns how many were removed.
    pub fn purge_expired(&self) -> usize {
        let now = self.clock.now();
        let mut sessions = self.sessions.write();
        let before = sessions.len();
        sessions.retain(|_, s| s.expires_at > now);
        before - sessions.len()
    }
}

/// 256 random bits as 64 hex characters.
fn new_session_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    hex::encode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn service(clock: Arc<ManualClock>) -> IdentityService {
        let fixtures = StubFixtures::parse(
            r#"
            [[account]]
            provider = "github"
            account_id = "alice"
            credential = "alice-pw"

            [[account]]
            provider = "google"
            account_id = "alice"
            credential = "alice-google"
            "#,
        )
        .unwrap();
        IdentityService::from_fixtures(&fixtures, clock).unwrap()
    }

    // Expected digests computed with Python's hashlib.md5.
    #[test]
    fn md5_reference_values() {
        assert_eq!(hash_identity("google", "alice").unwrap().as_str(), "3771fe58461db351cac2c81d9252efc9");
        assert_eq!(hash_identity("github", "alice").unwrap().as_str(), "466c18d13a3fbfbe7c8a8a0083399a13");
        assert_eq!(hash_identity("spotify", "bob").unwrap().as_str(), "13cb21c8f61217bf9d695eeea3cc5cba");
    }

    #[test]
    fn hash_is_deterministic_and_provider_scoped() {
        assert_eq!(hash_identity("google", "alice"), hash_identity("google", "alice"));
        assert_ne!(hash_identity("google", "alice").unwrap(), hash_identity("github", "alice").unwrap());
        assert_eq!(hash_identity("", "alice"), Err(IdentityError::EmptyInput));
        assert_eq!(hash_identity("google", ""), Err(IdentityError::EmptyInput));
        let alt = IdentityHasher::Sha256Truncated.hash("google", "alice").unwrap();
        assert_ne!(alt, hash_identity("google", "alice").unwrap());
    }

    #[test]
    fn stub_login_yields_hashed_identity() {
        let svc = service(Arc::new(ManualClock::new(1000)));
        let s = svc.authenticate("github", "alice-pw").unwrap();
        assert_eq!(s.user_id, hash_identity("github", "alice").unwrap());
        assert_eq!(s.expires_at, 1000 + DEFAULT_SESSION_TTL_SECS);
        assert_eq!(s.session_token.len(), 64);
    }

    #[test]
    fn login_errors() {
        let svc = service(Arc::new(ManualClock::new(0)));
        assert_eq!(svc.authenticate("myspace", "x").unwrap_err(), IdentityError::UnknownProvider("myspace".into()));
        assert_eq!(svc.authenticate("github", "wrong").unwrap_err(), IdentityError::InvalidCredentials);
    }

    #[test]
    fn repeated_logins_share_identity_not_token() {
        let svc = service(Arc::new(ManualClock::new(0)));
        let a = svc.authenticate("github", "alice-pw").unwrap();
        let b = svc.authenticate("github", "alice-pw").unwrap();
        assert_eq!(a.user_id, b.user_id);
        assert_ne!(a.session_token, b.session_token);
    }

    #[test]
    fn session_lifecycle() {
        let clock = Arc::new(ManualClock::new(50));
        let svc = service(clock.clone()).with_session_ttl(100);
        let s = svc.authenticate("github", "alice-pw").unwrap();
        assert_eq!(svc.resolve_session(&s.session_token).unwrap(), s);
        assert_eq!(svc.resolve_session(&"0".repeat(64)).unwrap_err(), IdentityError::UnknownSession);
        clock.advance(100);
        assert_eq!(svc.resolve_session(&s.session_token).unwrap_err(), IdentityError::ExpiredSession);
        assert_eq!(svc.resolve_session(&s.session_token).unwrap_err(), IdentityError::UnknownSession);
    }

    #[test]
    fn provider_registration_rules() {
        let mut svc = IdentityService::new(Arc::new(SystemClock));
        svc.register("github", Arc::new(StubProvider::new())).unwrap();
        assert!(matches!(svc.register("github", Arc::new(StubProvider::new())), Err(IdentityError::DuplicateProvider(_))));
        assert!(matches!(svc.register("GitHub", Arc::new(StubProvider::new())), Err(IdentityError::BadProviderName(_))));
    }

    #[test]
    fn provider_config_from_lookup() {
        let env: HashMap<&str, &str> = [
            ("RATING_GITHUB_CLIENT_ID", "id"),
            ("RATING_GITHUB_CLIENT_SECRET", "secret"),
            ("RATING_GITHUB_CALLBACK_URL", "http://localhost/cb"),
        ]
        .into();
        let cfg = ProviderConfig::from_lookup("github", |k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.userinfo_url, "https://api.github.com/user");
        assert!(!format!("{cfg:?}").contains("secret\""));
        assert!(ProviderConfig::from_lookup("myspace", |k| env.get(k).map(|v| v.to_string())).is_none());
    }
}
