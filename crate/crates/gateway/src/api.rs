//! JSON-over-HTTP front end. Every response body is JSON; read endpoints
//! also carry the tip state digest in `x-state-digest`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use rating_core::Hash32;

use crate::error::ApiError;
use crate::service::{AuthRequest, RateRequest, RateStatus, RatingService, Snapshot};

pub const STATE_DIGEST_HEADER: &str = "x-state-digest";

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type AppState = Arc<RatingService>;

fn cors(origins: &[String]) -> Option<CorsLayer> {
    if origins.is_empty() {
        return None;
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    Some(
        CorsLayer::new()
            .allow_origin(allow)
            .allow_methods(Any)
            .allow_headers(Any)
            .expose_headers([axum::http::HeaderName::from_static(STATE_DIGEST_HEADER)]),
    )
}

pub fn router(service: Arc<RatingService>) -> Router {
    let cors = cors(&service.settings().cors_origins);
    let router = Router::new()
        .route("/auth", post(auth))
        .route("/rate", post(rate))
        .route("/resources", get(resources))
        .route("/resources/{id}", get(resource))
        .route("/history/{user_id}", get(history))
        .route("/chain", get(chain))
        .route("/admin/mine", post(mine))
        .fallback(|| async { ApiError::not_found("No such endpoint.") })
        .with_state(service);
    match cors {
        Some(layer) => router.layer(layer),
        None => router,
    }
}

/// Runs blocking service work (locks, PoW, outbound probes) off the
/// async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn with_digest<T: Serialize>(snap: Snapshot<T>) -> Response {
    let mut resp = Json(snap.value).into_response();
    resp.headers_mut().insert(STATE_DIGEST_HEADER, digest_value(snap.state_digest));
    resp
}

fn digest_value(d: Hash32) -> HeaderValue {
    HeaderValue::from_str(&d.to_hex()).expect("hex is a valid header value")
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(axum::http::header::AUTHORIZATION)?.to_str().ok()?;
    let token = value.strip_prefix("Bearer ").or_else(|| value.strip_prefix("bearer "))?;
    Some(token.trim().to_string()).filter(|t| !t.is_empty())
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn auth(State(svc): State<AppState>, payload: Result<Json<AuthRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let out = blocking(move || svc.authenticate(&req)).await?;
    Ok(Json(out).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct RateQuery {
    #[serde(default)]
    estimate: bool,
}

async fn rate(
    State(svc): State<AppState>,
    Query(q): Query<RateQuery>,
    headers: HeaderMap,
    payload: Result<Json<RateRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let token = bearer(&headers);
    // Authentication comes before body checks so an anonymous caller
    // learns nothing about the request.
    if token.is_none() {
        return Err(ApiError::unauthorized("Authentication required."));
    }
    let req = body(payload)?;
    let svc2 = svc.clone();
    let out = blocking(move || svc2.rate(token.as_deref(), &req, q.estimate)).await?;
    let status = if out.status == RateStatus::Estimate { StatusCode::OK } else { StatusCode::ACCEPTED };
    let mut resp = (status, Json(out)).into_response();
    resp.headers_mut().insert(STATE_DIGEST_HEADER, digest_value(svc.tip_digest()));
    Ok(resp)
}

#[derive(Debug, Default, Deserialize)]
struct Page {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

async fn resources(State(svc): State<AppState>, Query(page): Query<Page>) -> Result<Response, ApiError> {
    let snap = blocking(move || Ok(svc.resources(page.offset, page.limit))).await?;
    Ok(with_digest(snap))
}

async fn resource(State(svc): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = blocking(move || svc.resource(&id)).await?;
    Ok(with_digest(snap))
}

async fn history(State(svc): State<AppState>, Path(user): Path<String>) -> Result<Response, ApiError> {
    let snap = blocking(move || svc.history(&user)).await?;
    Ok(with_digest(snap))
}

async fn chain(State(svc): State<AppState>) -> Result<Response, ApiError> {
    let snap = blocking(move || Ok(svc.blocks())).await?;
    Ok(with_digest(snap))
}

async fn mine(State(svc): State<AppState>) -> Result<Response, ApiError> {
    let svc2 = svc.clone();
    let block = blocking(move || svc2.mine_now()).await?;
    let mut resp = Json(block).into_response();
    resp.headers_mut().insert(STATE_DIGEST_HEADER, digest_value(svc.tip_digest()));
    Ok(resp)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Arc<RatingService>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await
}
