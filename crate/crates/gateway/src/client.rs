//! Blocking HTTP client for the gateway API, used by the CLI.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

use crate::error::ApiError;
use crate::oauth::http_agent;
use crate::service::{
    AuthRequest, AuthResponse, BlockSummary, HistoryRow, RateRequest, RateResponse, ResourceRow,
};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The server answered with an error body.
    #[error("{} ({status})", .error.message)]
    Api { status: u16, error: ApiError },
    #[error("cannot reach server: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            Self::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub struct ApiClient {
    base: String,
    agent: Agent,
    token: Option<String>,
}

impl ApiClient {
    pub fn new(base: &str) -> Self {
        Self { base: base.trim_end_matches('/').to_string(), agent: http_agent(Duration::from_secs(60)), token: None }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    fn finish<T: DeserializeOwned>(result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<T, ClientError> {
        let mut resp = result.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Decode(e.to_string()))?;
        if (200..300).contains(&status) {
            serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
        } else {
            let error = serde_json::from_str(&text).map_err(|_| ClientError::Decode(format!("status {status}: {text}")))?;
            Err(ClientError::Api { status, error })
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::finish(self.agent.get(&format!("{}{path}", self.base)).call())
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let mut req = self.agent.post(&format!("{}{path}", self.base));
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        Self::finish(req.send_json(body))
    }

    pub fn auth(&self, provider: &str, credential: &str) -> Result<AuthResponse, ClientError> {
        self.post("/auth", &AuthRequest { provider: provider.into(), credential: credential.into() })
    }

    pub fn rate(&self, req: &RateRequest, estimate: bool) -> Result<RateResponse, ClientError> {
        let path = if estimate { "/rate?estimate=true" } else { "/rate" };
        self.post(path, req)
    }

    pub fn resources(&self) -> Result<Vec<ResourceRow>, ClientError> {
        self.get("/resources")
    }

    pub fn history(&self, user_id: &str) -> Result<Vec<HistoryRow>, ClientError> {
        self.get(&format!("/history/{user_id}"))
    }

    pub fn chain(&self) -> Result<Vec<BlockSummary>, ClientError> {
        self.get("/chain")
    }
}
