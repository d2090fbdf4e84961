use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;

use super::runs::{RunStatus, ScriptInput};
use super::store::{Metadata, Pool, RepoError, Store};
use crate::digest::Digest64;
use crate::dsl::Script;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    /// `POST /runs` answers once the run has finished.
    #[default]
    Sync,
    /// `POST /runs` answers at once; a single worker runs jobs in order.
    Queued,
}

/// Shared state of the REST service.
pub struct Service {
    store: Arc<Store>,
    run_lock: Arc<Mutex<()>>,
    queue: Option<mpsc::UnboundedSender<(Digest64, Script)>>,
}

impl Service {
    /// Must be called inside a tokio runtime when `mode` is queued.
    pub fn new(store: Store, mode: RunMode) -> Arc<Service> {
        let store = Arc::new(store);
        let run_lock = Arc::new(Mutex::new(()));
        let queue = match mode {
            RunMode::Sync => None,
            RunMode::Queued => {
                let (tx, mut rx) = mpsc::unbounded_channel::<(Digest64, Script)>();
                let (store, lock) = (store.clone(), run_lock.clone());
                tokio::spawn(async move {
                    while let Some((id, script)) = rx.recv().await {
                        let (store, lock) = (store.clone(), lock.clone());
                        let _ = tokio::task::spawn_blocking(move || {
                            let _g = lock.lock().unwrap_or_else(|e| e.into_inner());
                            store.execute_run(id, &script)
                        })
                        .await;
                    }
                });
                Some(tx)
            }
        };
        Arc::new(Service {
            store,
            run_lock,
            queue,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }
}

struct ApiError(RepoError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (code, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<RepoError> for ApiError {
    fn from(e: RepoError) -> Self {
        ApiError(e)
    }
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError(RepoError::Invalid(e.to_string())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutBody {
    payload: Value,
    metadata: Metadata,
}

async fn put_entry(
    State(svc): State<Arc<Service>>,
    Path(pool): Path<String>,
    bytes: Bytes,
) -> Result<Json<Value>, ApiError> {
    let pool: Pool = pool.parse()?;
    let req: PutBody = body(&bytes)?;
    let id = svc.store.put(pool, &req.payload, req.metadata)?;
    Ok(Json(json!({ "id": id })))
}

async fn get_entry(
    State(svc): State<Arc<Service>>,
    Path((pool, id)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let pool: Pool = pool.parse()?;
    let entry = svc.store.get(pool, &id)?;
    Ok(Json(serde_json::to_value(entry).expect("entry serializes")))
}

async fn list_entries(
    State(svc): State<Arc<Service>>,
    Path(pool): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let pool: Pool = pool.parse()?;
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let list = svc.store.list(pool, q)?;
    Ok(Json(serde_json::to_value(list).expect("list serializes")))
}

async fn submit_run(State(svc): State<Arc<Service>>, bytes: Bytes) -> Result<Json<Value>, ApiError> {
    let input: ScriptInput = body(&bytes)?;
    let (store, lock) = (svc.store.clone(), svc.run_lock.clone());
    let (id, script) = tokio::task::spawn_blocking({
        let store = store.clone();
        move || store.prepare_run(&input)
    })
    .await
    .map_err(|e| ApiError(RepoError::Io(e.to_string())))??;
    if let Some(queue) = &svc.queue {
        queue
            .send((id, script))
            .map_err(|_| ApiError(RepoError::Io("run worker stopped".into())))?;
        return Ok(Json(json!({ "run_id": id, "status": RunStatus::Queued })));
    }
    let record = tokio::task::spawn_blocking(move || {
        let _g = lock.lock().unwrap_or_else(|e| e.into_inner());
        store.execute_run(id, &script)
    })
    .await
    .map_err(|e| ApiError(RepoError::Io(e.to_string())))??;
    Ok(Json(json!({ "run_id": id, "status": record.status })))
}

async fn get_run(
    State(svc): State<Arc<Service>>,
    Path(run_id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let record = svc.store.get_run(&run_id)?;
    Ok(Json(serde_json::to_value(record).expect("record serializes")))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/pools/{pool}", post(put_entry).get(list_entries))
        .route("/pools/{pool}/{id}", get(get_entry))
        .route("/runs", post(submit_run))
        .route("/runs/{run_id}", get(get_run))
        .with_state(service)
}

/// Serves on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}

/// Binds `addr` and serves the repository at `root` on a new runtime.
/// `on_bound` receives the bound address before requests are accepted.
pub fn serve_blocking(
    root: &std::path::Path,
    addr: SocketAddr,
    mode: RunMode,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), String> {
    let store = Store::open(root).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| e.to_string())?;
        on_bound(listener.local_addr().map_err(|e| e.to_string())?);
        let service = Service::new(store, mode);
        serve(listener, service).await.map_err(|e| e.to_string())
    })
}
