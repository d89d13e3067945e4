#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use rating_core::identity::{Clock, ManualClock};
use rating_core::validation::ResourceProbe;
use rating_gateway::{GatewayConfig, RatingService};

pub struct TestServer {
    pub base: String,
    pub service: Arc<RatingService>,
}

/// Serves `service` on an ephemeral port from a background runtime.
pub fn serve(service: RatingService) -> TestServer {
    let service = Arc::new(service);
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let svc = service.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            rating_gateway::serve(listener, svc, std::future::pending()).await.unwrap();
        });
    });
    TestServer { base, service }
}

pub fn config(chain_file: Option<PathBuf>) -> GatewayConfig {
    GatewayConfig { chain_file, difficulty: 4, dev_mode: true, ..GatewayConfig::default() }
}

pub fn start(config: GatewayConfig) -> TestServer {
    start_with(config, Arc::new(ManualClock::new(1_700_000_000)), None)
}

pub fn start_with(config: GatewayConfig, clock: Arc<dyn Clock>, probe: Option<Arc<dyn ResourceProbe>>) -> TestServer {
    serve(config.build_with(clock, probe).unwrap())
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub struct Reply {
    pub status: u16,
    pub digest: Option<String>,
    pub body: serde_json::Value,
}

fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
    let mut resp = resp.unwrap();
    let status = resp.status().as_u16();
    let digest = resp.headers().get("x-state-digest").map(|v| v.to_str().unwrap().to_string());
    let text = resp.body_mut().read_to_string().unwrap();
    let body = serde_json::from_str(&text).unwrap_or_else(|_| panic!("non-json body {text:?}"));
    Reply { status, digest, body }
}

pub fn get(base: &str, path: &str) -> Reply {
    finish(agent().get(&format!("{base}{path}")).call())
}

pub fn post(base: &str, path: &str, token: Option<&str>, body: serde_json::Value) -> Reply {
    let mut req = agent().post(&format!("{base}{path}"));
    if let Some(t) = token {
        req = req.header("Authorization", &format!("Bearer {t}"));
    }
    finish(req.send_json(body))
}

/// Logs in with a stub credential and returns the session token.
pub fn login(base: &str, provider: &str, credential: &str) -> String {
    let r = post(base, "/auth", None, serde_json::json!({ "provider": provider, "credential": credential }));
    assert_eq!(r.status, 200, "{:?}", r.body);
    r.body["session_token"].as_str().unwrap().to_string()
}

pub fn rate(base: &str, token: &str, url: &str, like: bool) -> Reply {
    post(base, "/rate", Some(token), serde_json::json!({ "url": url, "vote": like }))
}

/// Percent-encodes a path segment.
pub fn encode(segment: &str) -> String {
    url::form_urlencoded::byte_serialize(segment.as_bytes()).collect()
}
