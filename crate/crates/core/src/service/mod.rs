//! Session-based comparison service.
//!
//! A session holds one request's input rankings and the multileaved ranking
//! shown for it. Clicks on that ranking accumulate per-ranker credit, and
//! experiments sum credit across sessions by ranker name. Every mutation is
//! appended to a JSONL log before it is acknowledged; the log is replayed on
//! startup.

mod http;
pub mod log;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multileaver::Method;
use crate::ranking::CreditFunction;

pub use http::router;
pub use store::{
    ClickAck, CreatedSession, ExperimentResults, NewSession, RankedItem, SessionView, Store,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Event log; `None` keeps everything in memory.
    pub log_path: Option<PathBuf>,
    pub default_method: Method,
    pub default_credit: CreditFunction,
    pub candidates: usize,
    pub alpha: f64,
    pub session_ttl: Duration,
    /// When set, requests must carry `Authorization: Bearer <token>`.
    pub token: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            log_path: None,
            default_method: Method::Gom,
            default_credit: CreditFunction::Personalization,
            candidates: 10,
            alpha: 0.0,
            session_ttl: Duration::from_secs(24 * 3600),
            token: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    Unauthorized,
    Internal,
}

/// Error returned to API callers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceError {
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl ServiceError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ServiceError { kind: ErrorKind::BadRequest, field: None, message: message.into() }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ServiceError { kind: ErrorKind::BadRequest, field: Some(field.into()), message: message.into() }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ServiceError { kind: ErrorKind::NotFound, field: None, message: message.into() }
    }

    pub fn internal(err: Error) -> Self {
        ServiceError { kind: ErrorKind::Internal, field: None, message: err.to_string() }
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ServiceError {}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Binds, replays the log and serves until ctrl-c or SIGTERM. The log is
/// synced before returning.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let store = Arc::new(Store::open(config.clone())?);
    let listener = tokio::net::TcpListener::bind(config.listen).await.map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot listen on {}: {e}", config.listen)))
    })?;
    tracing::info!(addr = %config.listen, sessions = store.session_count(), "service listening");

    let sweeper = {
        let store = store.clone();
        let period = (config.session_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                match store.evict_idle(now_ms()) {
                    Ok(0) => {}
                    Ok(n) => tracing::info!(evicted = n, "evicted idle sessions"),
                    Err(e) => tracing::error!(error = %e, "eviction failed"),
                }
            }
        })
    };

    axum::serve(listener, router(store.clone())).with_graceful_shutdown(shutdown_signal()).await?;
    sweeper.abort();
    store.flush()?;
    tracing::info!("service stopped");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
