use std::time::Duration;

use ureq::Agent;

use rating_core::validation::{ProbeResponse, ResourceProbe};
use rating_core::ResourceId;

use crate::oauth::http_agent;

/// Checks that a resource URL answers with a 2xx.
pub struct HttpProbe {
    agent: Agent,
}

impl HttpProbe {
    pub fn new(timeout: Duration) -> Self {
        Self { agent: http_agent(timeout) }
    }
}

impl Default for HttpProbe {
    fn default() -> Self {
        Self::new(Duration::from_secs(5))
    }
}

impl ResourceProbe for HttpProbe {
    fn probe(&self, resource: &ResourceId) -> ProbeResponse {
        match self.agent.get(resource.as_str()).header("User-Agent", "rating-gateway").call() {
            Ok(resp) if resp.status().is_success() => ProbeResponse::Exists,
            Ok(_) => ProbeResponse::NotFound,
            Err(e) => {
                tracing::debug!(resource = resource.as_str(), error = %e, "probe failed");
                ProbeResponse::Unreachable
            }
        }
    }
}
