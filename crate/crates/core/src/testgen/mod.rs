//! Path-sensitive test generation for the callbacks a diff marks as
//! changed: bounded depth-first path enumeration plus an interval solver
//! over the single-variable branch atoms along each path.

mod paths;
mod solver;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::diff::CallbackDiff;
use crate::digest::Digest64;
use crate::model::{AppModel, Callback};

pub use paths::{back_edges, enumerate_paths, path_id, Path};
pub use solver::{path_condition, solve_path_condition, IntervalSet, Solution, SOLVER_WINDOW};

pub const DEFAULT_LOOP_BOUND: u32 = 2;
pub const DEFAULT_MAX_PATHS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestgenError {
    #[error("callback `{callback}` has more than {limit} paths")]
    PathExplosion { callback: String, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GenConfig {
    pub loop_bound: u32,
    pub max_paths: usize,
    /// Restricts every input to `[lo, hi]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<(i64, i64)>,
    /// Test unchanged callbacks too, as if modified.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub force_all: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            loop_bound: DEFAULT_LOOP_BOUND,
            max_paths: DEFAULT_MAX_PATHS,
            input_domain: None,
            force_all: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSource {
    Original,
    InstrumentedOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCase {
    pub id: String,
    pub callback: String,
    pub inputs: BTreeMap<String, i64>,
    pub source: TestSource,
    pub expected_path_id: Digest64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedPath {
    pub callback: String,
    pub path_id: Digest64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestSuite {
    pub generated: Vec<TestCase>,
    pub skipped_infeasible: Vec<SkippedPath>,
    pub warnings: Vec<String>,
    pub config: GenConfig,
}

impl TestSuite {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("suite always serializes");
        s.push('\n');
        s
    }
}

/// Tests for every modified callback (paths of the original version) and
/// every added one (paths of the instrumented version), in callback-name
/// order. Inputs cover the parameters of both versions.
pub fn generate_tests(
    original: &AppModel,
    instrumented: &AppModel,
    diff: &CallbackDiff,
    config: &GenConfig,
) -> Result<TestSuite, TestgenError> {
    let mut targets: Vec<(&str, TestSource)> = diff
        .modified
        .iter()
        .map(|n| (n.as_str(), TestSource::Original))
        .chain(diff.added.iter().map(|n| (n.as_str(), TestSource::InstrumentedOnly)))
        .collect();
    if config.force_all {
        targets.extend(diff.unchanged.iter().map(|n| (n.as_str(), TestSource::Original)));
    }
    targets.sort_by(|a, b| a.0.cmp(b.0));

    let mut suite = TestSuite {
        generated: Vec::new(),
        skipped_infeasible: Vec::new(),
        warnings: diff.warnings(),
        config: *config,
    };
    for (name, source) in targets {
        let (side, other) = match source {
            TestSource::Original => (original, instrumented),
            TestSource::InstrumentedOnly => (instrumented, original),
        };
        let cb = side.callback(name).expect("diff names exist");
        for path in enumerate_paths(cb, config.loop_bound, config.max_paths)? {
            match solve_path_condition(&path, cb, config.input_domain) {
                Solution::Feasible(mut inputs) => {
                    if let Some(o) = other.callback(name) {
                        cover_params(&mut inputs, o);
                    }
                    suite.generated.push(TestCase {
                        id: format!("{name}@{}", path.path_id),
                        callback: name.to_string(),
                        inputs,
                        source,
                        expected_path_id: path.path_id,
                    });
                }
                Solution::Infeasible(reason) => suite.skipped_infeasible.push(SkippedPath {
                    callback: name.to_string(),
                    path_id: path.path_id,
                    reason,
                }),
            }
        }
    }
    Ok(suite)
}

fn cover_params(inputs: &mut BTreeMap<String, i64>, cb: &Callback) {
    for p in &cb.params {
        inputs.entry(p.clone()).or_insert(0);
    }
}

#[cfg(test)]
mod tests;
