use std::collections::BTreeMap;

use serde::Serialize;

use crate::digest::Digest64;

pub const METRICS: [&str; 4] = ["sim_time_ms", "net_bytes", "net_requests", "cache_hits"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UiCheckpoint {
    pub seq: usize,
    pub widget: String,
    pub value: String,
    /// Digest of `widget=value`.
    pub digest: Digest64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetOutcome {
    Fetched,
    CacheHit,
    Prefetched,
    /// Prefetch not issued because the battery was below the threshold.
    PrefetchSkipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetEvent {
    pub node: String,
    pub url: String,
    pub outcome: NetOutcome,
    pub bytes: u64,
    pub at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentStatus {
    Delivered,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntentEvent {
    pub node: String,
    pub action: String,
    pub status: IntentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecFault {
    BudgetExhausted,
    UninitializedResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Normal,
    Error(ExecFault),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunTrace {
    pub callback: String,
    pub inputs: BTreeMap<String, i64>,
    pub executed: Vec<String>,
    pub path_id: Digest64,
    pub ui_checkpoints: Vec<UiCheckpoint>,
    pub nfp: BTreeMap<String, u64>,
    pub entry_clock: u64,
    pub exit_clock: u64,
    pub net_events: Vec<NetEvent>,
    pub intent_events: Vec<IntentEvent>,
    pub termination: Termination,
}

impl RunTrace {
    pub fn metric(&self, name: &str) -> u64 {
        self.nfp.get(name).copied().unwrap_or(0)
    }

    pub fn sim_time_ms(&self) -> u64 {
        self.metric("sim_time_ms")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace always serializes");
        s.push('\n');
        s
    }
}
