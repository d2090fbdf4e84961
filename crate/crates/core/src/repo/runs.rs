use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::store::{Pool, RepoError, Store};
use crate::digest::Digest64;
use crate::dsl::{parse_script, run_id, run_script, write_run, Script};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Failed,
}

/// What `runs/<run_id>/status.json` holds; `report` is filled in from
/// `report.json` when the run is done.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: Digest64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
}

/// A script given by pool id or inline.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptInput {
    ScriptId(String),
    ScriptText(String),
}

impl Store {
    /// Parses the submitted script and records it as queued.
    pub fn prepare_run(&self, input: &ScriptInput) -> Result<(Digest64, Script), RepoError> {
        let text = match input {
            ScriptInput::ScriptText(t) => t.clone(),
            ScriptInput::ScriptId(id) => match self.get(Pool::Scripts, id)?.payload {
                Value::String(s) => s,
                _ => return Err(RepoError::Io(format!("script `{id}` is not text"))),
            },
        };
        let script = parse_script(&text).map_err(|e| RepoError::Invalid(e.to_string()))?;
        let id = run_id(&script);
        self.write_record(&RunRecord {
            run_id: id,
            status: RunStatus::Queued,
            message: None,
            report: None,
        })?;
        Ok((id, script))
    }

    /// Runs a prepared script with pool references resolved from this store.
    pub fn execute_run(&self, id: Digest64, script: &Script) -> Result<RunRecord, RepoError> {
        self.write_record(&RunRecord {
            run_id: id,
            status: RunStatus::Running,
            message: None,
            report: None,
        })?;
        let record = match run_script(script, self) {
            Ok(run) => {
                write_run(&run, self.root()).map_err(|e| RepoError::Io(e.to_string()))?;
                RunRecord {
                    run_id: id,
                    status: RunStatus::Done,
                    message: None,
                    report: None,
                }
            }
            Err(e) => {
                let dir = self.run_dir(id);
                std::fs::create_dir_all(dir.join("traces")).map_err(|e| RepoError::Io(e.to_string()))?;
                std::fs::write(dir.join("script.dscr"), crate::dsl::format_script(script))
                    .map_err(|e| RepoError::Io(e.to_string()))?;
                RunRecord {
                    run_id: id,
                    status: RunStatus::Failed,
                    message: Some(e.to_string()),
                    report: None,
                }
            }
        };
        self.write_record(&record)?;
        Ok(record)
    }

    fn run_dir(&self, id: Digest64) -> std::path::PathBuf {
        self.root().join("runs").join(id.to_hex())
    }

    fn write_record(&self, record: &RunRecord) -> Result<(), RepoError> {
        let dir = self.run_dir(record.run_id);
        std::fs::create_dir_all(&dir).map_err(|e| RepoError::Io(e.to_string()))?;
        let mut text = serde_json::to_string_pretty(record).expect("record serializes");
        text.push('\n');
        std::fs::write(dir.join("status.json"), text).map_err(|e| RepoError::Io(e.to_string()))
    }

    pub fn get_run(&self, run_id: &str) -> Result<RunRecord, RepoError> {
        let not_found = || RepoError::RunNotFound(run_id.to_string());
        let id: Digest64 = run_id.parse().map_err(|_| not_found())?;
        let dir = self.run_dir(id);
        let text = std::fs::read_to_string(dir.join("status.json")).map_err(|_| not_found())?;
        let mut record: RunRecord =
            serde_json::from_str(&text).map_err(|e| RepoError::Io(format!("corrupt run record: {e}")))?;
        if record.status == RunStatus::Done {
            let report = std::fs::read_to_string(dir.join("report.json")).map_err(|e| RepoError::Io(e.to_string()))?;
            record.report = Some(serde_json::from_str(&report).map_err(|e| RepoError::Io(e.to_string()))?);
        }
        Ok(record)
    }
}
