//! HTTP gateway and client for the rating ledger.

pub mod api;
pub mod client;
pub mod config;
pub mod error;
pub mod http_probe;
pub mod oauth;
pub mod service;

pub use api::{router, serve, STATE_DIGEST_HEADER};
pub use config::{AuthMode, GatewayConfig};
pub use error::{ApiError, ErrorCode};
pub use service::{NodeSettings, RatingService};
