//! Read-only HTTP API over a scored rule table: ranked rules per target and
//! measure, blinded review sessions, and measure comparison artifacts.

mod state;

pub use state::{AppState, Dataset, Session, SESSION_HEADER};

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use rulerank_core::clusterlab::{group_report, DEFAULT_THETA, DEFAULT_TOP_K};
use rulerank_core::rankcorr::{Aggregation, Method};
use rulerank_core::rules::{Group, Measure};

pub const DEFAULT_PAGE: usize = 50;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/targets", get(targets))
        .route("/measures", get(measures))
        .route("/groups", get(groups))
        .route("/rules", get(rules))
        .route("/correlation", get(correlation))
        .route("/dendrogram", get(dendrogram))
        .with_state(state)
}

fn dataset(state: &AppState) -> ApiResult<Arc<Dataset>> {
    state
        .dataset()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "data is still loading"))
}

fn session(state: &AppState, headers: &HeaderMap) -> ApiResult<Session> {
    match headers.get(SESSION_HEADER) {
        None => Ok(Session::open()),
        Some(v) => {
            let id = v
                .to_str()
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "malformed session id"))?;
            state
                .session(id)
                .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown session"))
        }
    }
}

fn unblinded(s: &Session) -> ApiResult<()> {
    if s.blinded {
        Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "not available in a blinded session",
        ))
    } else {
        Ok(())
    }
}

#[derive(Deserialize, Default)]
struct SessionRequest {
    #[serde(default)]
    blinded: bool,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Option<Json<SessionRequest>>,
) -> impl IntoResponse {
    let blinded = body.map(|b| b.0.blinded).unwrap_or(false);
    let id = state.create_session(blinded);
    (
        [(SESSION_HEADER, id.to_string())],
        Json(json!({ "session_id": id.to_string(), "blinded": blinded })),
    )
}

async fn targets(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let data = dataset(&state)?;
    let items: Vec<Value> = data
        .targets()
        .map(|(label, rows)| json!({ "label": label, "rules": rows.len() }))
        .collect();
    Ok(Json(json!({ "targets": items })))
}

async fn measures(State(state): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult<Json<Value>> {
    dataset(&state)?;
    let s = session(&state, &headers)?;
    let items: Vec<Value> = if s.blinded {
        s.labels.iter().map(|(label, _)| json!({ "label": label })).collect()
    } else {
        Measure::ALL
            .iter()
            .map(|m| {
                json!({
                    "label": m.name(),
                    "group": m.group().as_str(),
                    "equivalences": m.equivalences().iter().map(|e| e.symbol()).collect::<Vec<_>>(),
                })
            })
            .collect()
    };
    Ok(Json(json!({ "blinded": s.blinded, "measures": items })))
}

async fn groups(State(state): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let data = dataset(&state)?;
    unblinded(&session(&state, &headers)?)?;
    let matrix = data
        .matrix(Method::Ndcc, Aggregation::PerTarget)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let (_, computed) = group_report(&matrix, data.table(), DEFAULT_THETA, DEFAULT_TOP_K)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let reference: Vec<Value> = Group::ALL
        .iter()
        .map(|g| {
            json!({
                "group": g.as_str(),
                "representative": g.representative().name(),
                "members": Measure::ALL.iter().filter(|m| m.group() == *g).map(|m| m.name()).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Json(json!({
        "method": "ndcc",
        "theta": DEFAULT_THETA,
        "computed": computed,
        "reference": reference,
    })))
}

#[derive(Deserialize)]
struct RulesQuery {
    target: String,
    measure: String,
    #[serde(default)]
    same_category: bool,
    limit: Option<usize>,
    #[serde(default)]
    offset: i64,
}

async fn rules(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<RulesQuery>,
) -> ApiResult<Json<Value>> {
    let data = dataset(&state)?;
    let s = session(&state, &headers)?;
    let measure = s.resolve(&q.measure).ok_or_else(|| {
        // Echoing the request back could put a real name in a blinded payload.
        let msg = if s.blinded {
            "unknown measure label".to_string()
        } else {
            format!("unknown measure `{}`", q.measure)
        };
        ApiError::new(StatusCode::BAD_REQUEST, msg)
    })?;
    let ranked = data
        .ranking(&q.target, measure)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown target `{}`", q.target)))?;
    let rows: Vec<usize> = if q.same_category {
        if !data.has_taxonomy() {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "same_category needs a taxonomy; none was loaded",
            ));
        }
        ranked.into_iter().filter(|&i| data.same_category(i)).collect()
    } else {
        ranked
    };
    let total = rows.len();
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    let start = if q.offset < 0 {
        total.saturating_sub(q.offset.unsigned_abs() as usize)
    } else {
        (q.offset as usize).min(total)
    };
    let end = if q.offset < 0 {
        total.min(start + limit.min(q.offset.unsigned_abs() as usize))
    } else {
        total.min(start.saturating_add(limit))
    };
    let items: Vec<Value> = rows[start..end]
        .iter()
        .enumerate()
        .map(|(i, &row)| {
            let r = &data.table().rows()[row];
            json!({
                "rank": start + i + 1,
                "antecedent": r.antecedent,
                "consequent": r.consequent,
                "support": r.support_ab,
                "confidence": r.confidence,
                "recall": r.recall,
            })
        })
        .collect();
    Ok(Json(json!({ "total": total, "offset": start, "items": items })))
}

#[derive(Deserialize)]
struct CompareQuery {
    method: Option<String>,
    aggregation: Option<String>,
    k: Option<usize>,
}

fn parse_compare(q: &CompareQuery) -> ApiResult<(Method, Aggregation)> {
    let bad = |e: rulerank_core::Error| ApiError::new(StatusCode::BAD_REQUEST, e.to_string());
    let mut method: Method = q.method.as_deref().unwrap_or("ndcc").parse().map_err(bad)?;
    if let Some(k) = q.k {
        if k == 0 {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "k must be at least 1"));
        }
        method = method.with_k(k);
    }
    let aggregation = match &q.aggregation {
        Some(a) => a.parse().map_err(bad)?,
        None => Aggregation::PerTarget,
    };
    Ok((method, aggregation))
}

async fn correlation(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<CompareQuery>,
) -> ApiResult<Json<Value>> {
    let data = dataset(&state)?;
    unblinded(&session(&state, &headers)?)?;
    let (method, aggregation) = parse_compare(&q)?;
    let m = data
        .matrix(method, aggregation)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(Json(m.to_json()))
}

async fn dendrogram(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<CompareQuery>,
) -> ApiResult<Json<Value>> {
    let data = dataset(&state)?;
    unblinded(&session(&state, &headers)?)?;
    let (method, aggregation) = parse_compare(&q)?;
    let d = data
        .dendrogram(method, aggregation)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(Json(json!({
        "method": method.to_string(),
        "aggregation": aggregation.as_str(),
        "tree": d.to_json(),
    })))
}

