//! Read-only HTTP service over a loaded artifact directory.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use evnet_core::netmodel::to_json;
use evnet_core::pipeline::{Analysis, Params, QueryError, Workspace};
use serde::Serialize;
use tower_http::cors::CorsLayer;

use crate::analysis_json;

/// Error body of every non-success response.
#[derive(Debug, Serialize)]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
}

struct Failure(QueryError);

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        Failure(e)
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = match self.0 {
            QueryError::NotFound(_) => StatusCode::NOT_FOUND,
            QueryError::BadRequest(_) => StatusCode::BAD_REQUEST,
            QueryError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ApiError {
            code: self.0.code(),
            message: self.0.to_string(),
        };
        (status, axum::Json(body)).into_response()
    }
}

type Reply = Result<Response, Failure>;

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn json_value<T: Serialize>(value: &T) -> Response {
    let mut text = serde_json::to_string_pretty(value).expect("response serializes");
    text.push('\n');
    json_text(text)
}

async fn slices(State(ws): State<Arc<Workspace>>) -> Reply {
    Ok(json_value(&ws.slices()))
}

async fn slice_events(State(ws): State<Arc<Workspace>>, Path(raw): Path<String>) -> Reply {
    let index: usize = raw
        .parse()
        .map_err(|_| QueryError::BadRequest(format!("slice index must be a non-negative integer, got {raw:?}")))?;
    Ok(json_value(&ws.slice_events(index)?))
}

async fn network(State(ws): State<Arc<Workspace>>, Path(id): Path<String>) -> Reply {
    Ok(json_text(to_json(ws.network(&id)?)))
}

async fn run(ws: Arc<Workspace>, event: Option<String>, kind: Analysis, params: Params) -> Reply {
    let text = tokio::task::spawn_blocking(move || analysis_json(&ws, event.as_deref(), kind, &params))
        .await
        .map_err(|e| QueryError::Internal(e.to_string()))??;
    Ok(json_text(text))
}

async fn event_analysis(
    State(ws): State<Arc<Workspace>>,
    Path((id, kind)): Path<(String, String)>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Reply {
    let kind: Analysis = kind.parse()?;
    run(ws, Some(id), kind, params).await
}

async fn global_plt(State(ws): State<Arc<Workspace>>, Query(params): Query<BTreeMap<String, String>>) -> Reply {
    run(ws, None, Analysis::Plt, params).await
}

async fn not_found() -> Failure {
    Failure(QueryError::NotFound("no such endpoint".into()))
}

async fn not_allowed() -> Failure {
    Failure(QueryError::BadRequest("the service is read-only; use GET".into()))
}

pub fn router(ws: Arc<Workspace>) -> Router {
    Router::new()
        .route("/slices", get(slices))
        .route("/slices/{index}/events", get(slice_events))
        .route("/events/{id}/network", get(network))
        .route("/events/{id}/analyze/{kind}", get(event_analysis))
        .route("/analyze/plt", get(global_plt))
        .fallback(not_found)
        .method_not_allowed_fallback(not_allowed)
        .layer(CorsLayer::permissive())
        .with_state(ws)
}

pub async fn serve(ws: Arc<Workspace>, port: u16) -> anyhow::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(ws))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
