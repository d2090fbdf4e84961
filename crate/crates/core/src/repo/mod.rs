//! Content-addressed repository with four pools and a REST service.
//!
//! Layout: `pools/<pool>/<id>.json` holds one [`PoolEntry`], where `id` is
//! the digest of the payload's canonical bytes; `runs/<run_id>/` holds
//! `script.dscr`, `report.json`, `traces/` and `status.json`.
//!
//! Endpoints: `POST /pools/{pool}` with `{payload, metadata}` returns `{id}`;
//! `GET /pools/{pool}/{id}`; `GET /pools/{pool}?q=` lists `{id, description}`;
//! `POST /runs` with `{script_id}` or `{script_text}` returns `{run_id, status}`;
//! `GET /runs/{run_id}`. Invalid input answers 400, missing entries 404.

mod runs;
mod service;
mod store;

pub use runs::{RunRecord, RunStatus, ScriptInput};
pub use service::{router, serve, serve_blocking, RunMode, Service};
pub use store::{Metadata, Pool, PoolEntry, RepoError, ServiceRequest, Store, Summary};
