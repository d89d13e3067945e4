//! Live provider login: exchange an authorization code for an access token,
//! then read the account id from the provider's userinfo endpoint.

use std::time::Duration;

use serde_json::Value;
use ureq::Agent;

use rating_core::identity::{IdentityError, ProviderClient, ProviderConfig};

pub struct OAuthProvider {
    config: ProviderConfig,
    agent: Agent,
}

impl OAuthProvider {
    pub fn new(config: ProviderConfig) -> Self {
        Self { config, agent: http_agent(Duration::from_secs(10)) }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn exchange(&self, code: &str) -> Result<String, IdentityError> {
        let mut resp = self
            .agent
            .post(&self.config.token_url)
            .header("Accept", "application/json")
            .send_form([
                ("grant_type", "authorization_code"),
                ("code", code),
                ("client_id", self.config.client_id.as_str()),
                ("client_secret", self.config.client_secret.as_str()),
                ("redirect_uri", self.config.callback_url.as_str()),
            ])
            .map_err(|e| IdentityError::Provider(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 400 || status == 401 || status == 403 {
            return Err(IdentityError::InvalidCredentials);
        }
        if !(200..300).contains(&status) {
            return Err(IdentityError::Provider(format!("token endpoint returned {status}")));
        }
        let body: Value = resp.body_mut().read_json().map_err(|e| IdentityError::Provider(e.to_string()))?;
        // GitHub answers 200 with an `error` field for a bad code.
        if body.get("error").is_some() {
            return Err(IdentityError::InvalidCredentials);
        }
        body.get("access_token")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| IdentityError::Provider("token response has no access_token".into()))
    }

    fn account_id(&self, token: &str) -> Result<String, IdentityError> {
        let mut resp = self
            .agent
            .get(&self.config.userinfo_url)
            .header("Authorization", &format!("Bearer {token}"))
            .header("Accept", "application/json")
            .header("User-Agent", "rating-gateway")
            .call()
            .map_err(|e| IdentityError::Provider(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(IdentityError::InvalidCredentials);
        }
        if !(200..300).contains(&status) {
            return Err(IdentityError::Provider(format!("userinfo endpoint returned {status}")));
        }
        let body: Value = resp.body_mut().read_json().map_err(|e| IdentityError::Provider(e.to_string()))?;
        match body.get(&self.config.account_field) {
            Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            _ => Err(IdentityError::Provider(format!("userinfo has no {:?} field", self.config.account_field))),
        }
    }
}

impl ProviderClient for OAuthProvider {
    /// `credential` is the authorization code from the provider callback.
    fn verify(&self, credential: &str) -> Result<String, IdentityError> {
        if credential.is_empty() {
            return Err(IdentityError::InvalidCredentials);
        }
        let token = self.exchange(credential)?;
        self.account_id(&token)
    }
}

/// Agent that hands every status back to the caller instead of erroring.
pub(crate) fn http_agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .build()
        .into()
}
