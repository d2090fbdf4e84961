use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arch::{manifest_from_value, serialize_manifest};
use crate::digest::{fnv1a64, Digest64};
use crate::dsl::{format_script, parse_script, Resolver};
use crate::model::{app_model_from_value, model_to_value, serialize_app_model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    /// Technique manifests.
    Microservices,
    /// Service requests.
    Requests,
    /// Test scripts.
    Scripts,
    /// App models.
    Benchmarks,
}

impl Pool {
    pub const ALL: [Pool; 4] = [Pool::Microservices, Pool::Requests, Pool::Scripts, Pool::Benchmarks];

    pub fn as_str(self) -> &'static str {
        match self {
            Pool::Microservices => "microservices",
            Pool::Requests => "requests",
            Pool::Scripts => "scripts",
            Pool::Benchmarks => "benchmarks",
        }
    }
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pool {
    type Err = RepoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pool::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| RepoError::UnknownPool(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub submitter: String,
    pub description: String,
    /// Digests of reports attached as test results.
    #[serde(default)]
    pub test_results: Vec<Digest64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub pool: Pool,
    pub id: Digest64,
    pub payload: Value,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceRequest {
    pub need: String,
    /// Id of a script in the scripts pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attached_script: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub id: Digest64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepoError {
    #[error("unknown pool `{0}`")]
    UnknownPool(String),
    #[error("invalid payload: {0}")]
    Invalid(String),
    #[error("no entry `{id}` in pool `{pool}`")]
    NotFound { pool: Pool, id: String },
    #[error("no run `{0}`")]
    RunNotFound(String),
    #[error("storage error: {0}")]
    Io(String),
}

impl RepoError {
    pub fn status(&self) -> u16 {
        match self {
            RepoError::UnknownPool(_) | RepoError::Invalid(_) => 400,
            RepoError::NotFound { .. } | RepoError::RunNotFound(_) => 404,
            RepoError::Io(_) => 500,
        }
    }
}

fn io(e: std::io::Error) -> RepoError {
    RepoError::Io(e.to_string())
}

/// On-disk repository: `pools/<pool>/<id>.json` and `runs/<run_id>/`.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    writes: Mutex<()>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, RepoError> {
        let root = root.into();
        for pool in Pool::ALL {
            std::fs::create_dir_all(root.join("pools").join(pool.as_str())).map_err(io)?;
        }
        std::fs::create_dir_all(root.join("runs")).map_err(io)?;
        Ok(Store {
            root,
            writes: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, pool: Pool, id: &str) -> PathBuf {
        self.root.join("pools").join(pool.as_str()).join(format!("{id}.json"))
    }

    /// Validates a payload and returns its canonical form and bytes.
    pub fn canonical_payload(&self, pool: Pool, payload: &Value) -> Result<(Value, String), RepoError> {
        let invalid = |e: &dyn fmt::Display| RepoError::Invalid(e.to_string());
        match pool {
            Pool::Benchmarks => {
                let m = app_model_from_value(payload).map_err(|e| invalid(&e))?;
                Ok((model_to_value(&m), serialize_app_model(&m)))
            }
            Pool::Microservices => {
                let m = manifest_from_value(payload.clone()).map_err(|e| invalid(&e))?;
                let v = serde_json::to_value(&m).expect("manifest serializes");
                Ok((v, serialize_manifest(&m)))
            }
            Pool::Scripts => {
                let text = payload
                    .as_str()
                    .ok_or_else(|| RepoError::Invalid("a script payload is the script text".into()))?;
                let script = parse_script(text).map_err(|e| invalid(&e))?;
                let formatted = format_script(&script);
                Ok((Value::String(formatted.clone()), formatted))
            }
            Pool::Requests => {
                let r: ServiceRequest = serde_json::from_value(payload.clone()).map_err(|e| invalid(&e))?;
                if let Some(id) = &r.attached_script {
                    if !self.entry_path(Pool::Scripts, id).is_file() {
                        return Err(RepoError::Invalid(format!("attached script `{id}` is not in the scripts pool")));
                    }
                }
                let v = serde_json::to_value(&r).expect("request serializes");
                let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
                text.push('\n');
                Ok((v, text))
            }
        }
    }

    /// Stores an entry under the digest of its canonical payload. Putting the
    /// same payload again returns the same id and keeps the first metadata.
    pub fn put(&self, pool: Pool, payload: &Value, metadata: Metadata) -> Result<Digest64, RepoError> {
        let (payload, bytes) = self.canonical_payload(pool, payload)?;
        let id = fnv1a64(bytes.as_bytes());
        let path = self.entry_path(pool, &id.to_hex());
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        if path.is_file() {
            return Ok(id);
        }
        let entry = PoolEntry {
            pool,
            id,
            payload,
            metadata,
        };
        let mut text = serde_json::to_string_pretty(&entry).expect("entry serializes");
        text.push('\n');
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text).map_err(io)?;
        std::fs::rename(&tmp, &path).map_err(io)?;
        Ok(id)
    }

    pub fn get(&self, pool: Pool, id: &str) -> Result<PoolEntry, RepoError> {
        let not_found = || RepoError::NotFound {
            pool,
            id: id.to_string(),
        };
        if id.parse::<Digest64>().is_err() {
            return Err(not_found());
        }
        let text = match std::fs::read_to_string(self.entry_path(pool, id)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(not_found()),
            Err(e) => return Err(io(e)),
        };
        serde_json::from_str(&text).map_err(|e| RepoError::Io(format!("corrupt entry `{id}`: {e}")))
    }

    fn ids(&self, pool: Pool) -> Result<Vec<String>, RepoError> {
        let mut ids = Vec::new();
        for f in std::fs::read_dir(self.root.join("pools").join(pool.as_str())).map_err(io)? {
            let name = f.map_err(io)?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".json") {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Entries whose description contains `query`, in id order.
    pub fn list(&self, pool: Pool, query: &str) -> Result<Vec<Summary>, RepoError> {
        let mut out = Vec::new();
        for id in self.ids(pool)? {
            let e = self.get(pool, &id)?;
            if e.metadata.description.contains(query) {
                out.push(Summary {
                    id: e.id,
                    description: e.metadata.description,
                });
            }
        }
        Ok(out)
    }

    /// Recomputes every entry id from its payload. Returns the number of
    /// entries checked, or one message per bad entry.
    pub fn fsck(&self) -> Result<usize, Vec<String>> {
        let mut problems = Vec::new();
        let mut checked = 0;
        for pool in Pool::ALL {
            let ids = match self.ids(pool) {
                Ok(ids) => ids,
                Err(e) => {
                    problems.push(format!("{pool}: {e}"));
                    continue;
                }
            };
            for id in ids {
                checked += 1;
                let entry = match self.get(pool, &id) {
                    Ok(e) => e,
                    Err(e) => {
                        problems.push(format!("{pool}/{id}: {e}"));
                        continue;
                    }
                };
                match self.canonical_payload(pool, &entry.payload) {
                    Ok((_, bytes)) => {
                        let actual = fnv1a64(bytes.as_bytes());
                        if actual.to_hex() != id || entry.id.to_hex() != id || entry.pool != pool {
                            problems.push(format!("{pool}/{id}: payload digest is {actual}"));
                        }
                    }
                    Err(e) => problems.push(format!("{pool}/{id}: {e}")),
                }
            }
        }
        if problems.is_empty() {
            Ok(checked)
        } else {
            Err(problems)
        }
    }
}

impl Resolver for Store {
    fn read_file(&self, path: &str) -> Result<(String, PathBuf), String> {
        Err(format!("`{path}`: repository runs read sources from pools only"))
    }

    fn pool_payload(&self, pool: Pool, id: &str) -> Result<Value, String> {
        self.get(pool, id).map(|e| e.payload).map_err(|e| e.to_string())
    }
}
