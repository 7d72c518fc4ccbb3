use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::store::NewSession;
use super::{ErrorKind, ServiceError, Store};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::bad_request(format!("invalid request body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionBody {
    ranker_names: Vec<String>,
    rankings: Vec<Vec<String>>,
    method: Option<String>,
    credit: Option<String>,
    length: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClickBody {
    position: usize,
    idempotency_key: Option<String>,
}

/// HTTP routes over `store`.
pub fn router(store: Arc<Store>) -> Router {
    let api = Router::new()
        .route("/v1/experiments/{eid}", post(create_experiment))
        .route("/v1/experiments/{eid}/sessions", post(create_session))
        .route("/v1/experiments/{eid}/results", get(results))
        .route("/v1/sessions/{sid}", get(session))
        .route("/v1/sessions/{sid}/clicks", post(click))
        .route_layer(middleware::from_fn_with_state(store.clone(), authorize));
    Router::new().route("/health", get(health)).merge(api).with_state(store)
}

async fn authorize(State(store): State<Arc<Store>>, req: Request, next: Next) -> Response {
    if let Some(token) = &store.config().token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ServiceError { kind: ErrorKind::Unauthorized, field: None, message: "missing or invalid token".into() }
                .into_response();
        }
    }
    next.run(req).await
}

async fn health(State(store): State<Arc<Store>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "sessions": store.session_count() }))
}

async fn create_experiment(State(store): State<Arc<Store>>, Path(eid): Path<String>) -> Response {
    match store.create_experiment(&eid) {
        Ok(()) => (StatusCode::CREATED, Json(serde_json::json!({ "experiment_id": eid }))).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn create_session(State(store): State<Arc<Store>>, Path(eid): Path<String>, body: Bytes) -> Response {
    let run = || {
        let b: SessionBody = parse(&body)?;
        let method = b.method.map(|m| m.parse()).transpose().map_err(|e: crate::Error| ServiceError::field("method", e.to_string()))?;
        let credit = b.credit.map(|c| c.parse()).transpose().map_err(|e: crate::Error| ServiceError::field("credit", e.to_string()))?;
        store.create_session(
            &eid,
            NewSession { ranker_names: b.ranker_names, rankings: b.rankings, method, credit, length: b.length },
        )
    };
    match run() {
        Ok(created) => (StatusCode::CREATED, Json(created)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn click(State(store): State<Arc<Store>>, Path(sid): Path<String>, body: Bytes) -> ApiResult<super::ClickAck> {
    let b: ClickBody = parse(&body)?;
    store.record_click(&sid, b.position, b.idempotency_key.as_deref()).map(Json)
}

async fn session(State(store): State<Arc<Store>>, Path(sid): Path<String>) -> ApiResult<super::SessionView> {
    store.get_session(&sid).map(Json)
}

async fn results(State(store): State<Arc<Store>>, Path(eid): Path<String>) -> ApiResult<super::ExperimentResults> {
    store.results(&eid).map(Json)
}
