//! HTTP facade over `vizrec-core`.
//!
//! Datasets are uploaded once, preprocessed, and frozen together with their
//! query class. Later requests can only read: no request can change a
//! dataset's class, VC dimension or selectivity floor.
//!
//! | Method | Path | Body / query | Response |
//! |---|---|---|---|
//! | `POST` | `/datasets` | `{name, csv, schema?, config?}` | [`DatasetHandle`] |
//! | `GET` | `/datasets` | | `[DatasetHandle]` |
//! | `POST` | `/datasets/{id}/recommend` | [`RecommendRequest`] | [`RecommendationSet`] |
//! | `GET` | `/datasets/{id}/pmf` | `predicate`, `group_by`, `delta?` | [`PmfResponse`] |
//! | `GET` | `/healthz` | | `{"status": "ok"}` |

mod error;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use vizrec_core::query::{Pmf, Predicate};
use vizrec_core::recommend::{
    clause_options, ExplorationConfig, PreparedDataset, PreprocessReport, RecommendRequest, RecommendationSet,
};
use vizrec_core::table::{load_table_str, FeatureKind, LoadOptions, Schema};
use vizrec_core::vc::QueryClassSpec;

pub use error::{ApiError, ErrorBody};

/// Default upload limit (request body bytes).
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_upload_bytes: usize,
    /// Origin allowed by CORS; any origin when `None`.
    pub allowed_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES, allowed_origin: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct UploadRequest {
    pub name: String,
    pub csv: String,
    #[serde(default)]
    pub schema: Schema,
    #[serde(default)]
    pub config: ExplorationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: FeatureKind,
    pub distinct: usize,
    pub nulls: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// False when preprocessing removed the column.
    pub retained: bool,
}

/// Per-dataset bookkeeping, fixed at registration apart from the counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLedger {
    pub requests_served: u64,
    pub query_class: QueryClassSpec,
    pub vc_dimension: u32,
    /// Number of predicates in the declared class over the retained
    /// columns, sentinels included (saturating).
    pub declared_hypotheses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHandle {
    pub id: String,
    pub name: String,
    pub n: usize,
    pub schema: Vec<ColumnSummary>,
    pub d: u32,
    pub delta: f64,
    pub gamma_min: f64,
    pub config: ExplorationConfig,
    pub report: PreprocessReport,
    pub ledger: SessionLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfResponse {
    pub predicate: Predicate,
    pub description: String,
    pub group_by: String,
    pub pmf: Pmf,
    pub support: u64,
    pub selectivity: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Support at or below which the visualization cannot be safe.
    pub min_support: f64,
    pub can_be_safe: bool,
}

#[derive(Debug, Deserialize)]
pub struct PmfParams {
    #[serde(default)]
    pub predicate: Option<String>,
    pub group_by: String,
    #[serde(default)]
    pub delta: Option<f64>,
}

struct Entry {
    handle: DatasetHandle,
    prepared: PreparedDataset,
    requests: AtomicU64,
}

impl Entry {
    fn handle(&self) -> DatasetHandle {
        let mut h = self.handle.clone();
        h.ledger.requests_served = self.requests.load(Ordering::Relaxed);
        h
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    datasets: Arc<RwLock<BTreeMap<u64, Arc<Entry>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    fn get(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        let key = id.strip_prefix("ds-").and_then(|k| k.parse::<u64>().ok());
        let map = self.datasets.read().map_err(ApiError::internal)?;
        key.and_then(|k| map.get(&k).cloned()).ok_or_else(|| ApiError::not_found(id))
    }
}

pub fn app(config: &ServiceConfig) -> Router {
    app_with_state(config, AppState::default())
}

pub fn app_with_state(config: &ServiceConfig, state: AppState) -> Router {
    let cors = match &config.allowed_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(v).allow_methods(tower_http::cors::Any).allow_headers(tower_http::cors::Any),
            Err(_) => CorsLayer::permissive(),
        },
        None => CorsLayer::permissive(),
    };
    Router::new()
        .route("/healthz", get(healthz))
        .route("/datasets", post(register).get(list))
        .route("/datasets/{id}/recommend", post(recommend))
        .route("/datasets/{id}/pmf", get(pmf))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(&config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

fn read_body<T: for<'de> Deserialize<'de>>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|rej| {
        if rej.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", rej.body_text())
        } else {
            ApiError::bad_request(rej.body_text())
        }
    })?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn register(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<DatasetHandle>), ApiError> {
    let upload: UploadRequest = read_body(body)?;
    let (handle, prepared) = blocking(move || prepare(upload)).await?;
    let key = state.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let mut handle = handle;
    handle.id = format!("ds-{key}");
    let entry = Arc::new(Entry { handle: handle.clone(), prepared, requests: AtomicU64::new(0) });
    state.datasets.write().map_err(ApiError::internal)?.insert(key, entry);
    log::info!("registered {} ({}, n = {}, d = {})", handle.id, handle.name, handle.n, handle.d);
    Ok((StatusCode::CREATED, Json(handle)))
}

fn prepare(upload: UploadRequest) -> Result<(DatasetHandle, PreparedDataset), ApiError> {
    let options = LoadOptions { name: upload.name.clone(), schema: upload.schema, ..Default::default() };
    let table = load_table_str(&upload.csv, &options).map_err(ApiError::upload)?;
    let prepared = PreparedDataset::prepare(&table, upload.config.clone()).map_err(ApiError::upload)?;
    let report = prepared.report().clone();
    let schema = table
        .columns()
        .map(|c| {
            let s = c.stats();
            ColumnSummary {
                name: c.name().to_string(),
                kind: c.kind(),
                distinct: s.distinct,
                nulls: s.nulls,
                min: s.min,
                max: s.max,
                retained: report.retained.iter().any(|r| r == c.name()),
            }
        })
        .collect();
    let config = prepared.config();
    let declared_hypotheses = prepared
        .class()
        .features
        .iter()
        .filter(|f| f.contribution() > 0)
        .filter_map(|f| prepared.table().column(&f.name).ok())
        .map(|col| clause_options(col, &config.operators, config.buckets).len() as u64)
        .fold(1u64, u64::saturating_mul);
    let handle = DatasetHandle {
        id: String::new(),
        name: upload.name,
        n: table.row_count(),
        schema,
        d: prepared.vc_dimension(),
        delta: config.delta,
        gamma_min: prepared.gamma_min(),
        config: config.clone(),
        ledger: SessionLedger {
            requests_served: 0,
            query_class: prepared.class().clone(),
            vc_dimension: prepared.vc_dimension(),
            declared_hypotheses,
        },
        report,
    };
    Ok((handle, prepared))
}

async fn list(State(state): State<AppState>) -> Result<Json<Vec<DatasetHandle>>, ApiError> {
    let map = state.datasets.read().map_err(ApiError::internal)?;
    Ok(Json(map.values().map(|e| e.handle()).collect()))
}

async fn recommend(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<RecommendationSet>, ApiError> {
    let entry = state.get(&id)?;
    let request: RecommendRequest = read_body(body)?;
    let worker = entry.clone();
    let set = blocking(move || worker.prepared.recommend(&request).map_err(ApiError::query)).await?;
    entry.requests.fetch_add(1, Ordering::Relaxed);
    Ok(Json(set))
}

async fn pmf(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<PmfParams>, QueryRejection>,
) -> Result<Json<PmfResponse>, ApiError> {
    let entry = state.get(&id)?;
    let Query(params) = params.map_err(|rej| ApiError::bad_request(rej.body_text()))?;
    let predicate = match params.predicate.as_deref() {
        None | Some("") => Predicate::truth(),
        Some(text) => Predicate::from_json(text).map_err(|e| ApiError::bad_request(format!("predicate: {e}")))?,
    };
    let prepared = &entry.prepared;
    let delta = params.delta.unwrap_or(prepared.config().delta);
    let bound = prepared.bound(delta).map_err(ApiError::query)?;
    let (pmf, selectivity) = prepared.visualization(&predicate, &params.group_by).map_err(ApiError::query)?;
    let epsilon = bound.epsilon_bar(pmf.support).map_err(ApiError::query)?.value;
    let min_support = bound.c * bound.complexity_term();
    Ok(Json(PmfResponse {
        description: predicate.describe(prepared.table()),
        predicate: predicate.canonical(),
        group_by: params.group_by,
        support: pmf.support,
        can_be_safe: pmf.support as f64 > min_support,
        pmf,
        selectivity,
        epsilon,
        delta,
        min_support,
    }))
}
