use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arch::{compose_pipeline, run_pipeline_until, RunOptions, TechniqueManifest};
use crate::model::parse_app_model;
use crate::rational::Ratio;

/// A `.utest.json` document.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct UnitTestDoc {
    pub id: String,
    pub technique: String,
    /// Component name to stop after, or `pipeline` for the whole pipeline.
    pub op: String,
    /// Input model path, relative to the unit-test file.
    pub input: String,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub kind: ExpectKind,
    pub value: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectKind {
    /// Hex content id of the canonical instrumented model.
    ModelHash,
    /// Exact JSON of the op's facts (all facts for `pipeline`).
    Facts,
    OsPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitResult {
    pub id: String,
    pub outcome: Outcome,
    /// Wall-clock measurements; not reproducible.
    pub nfp: UnitNfp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitNfp {
    pub execution_time_ms: f64,
}

impl UnitResult {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, thiserror::Error)]
pub enum UnitTestError {
    #[error("malformed unit test: {0}")]
    Malformed(String),
    #[error("unit test targets technique `{requested}`, manifest is `{actual}`")]
    UnknownTechnique { requested: String, actual: String },
    #[error("unknown op `{0}`")]
    UnknownOp(String),
    #[error("cannot read input `{path}`: {cause}")]
    MissingInput { path: PathBuf, cause: String },
    #[error("input model is invalid: {0}")]
    InvalidInput(String),
    #[error("{0}")]
    Compose(String),
}

pub fn parse_unit_test(text: &str) -> Result<UnitTestDoc, UnitTestError> {
    serde_json::from_str(text).map_err(|e| UnitTestError::Malformed(e.to_string()))
}

/// Runs the technique on the unit test's input and checks the expectation.
/// `base_dir` is the directory holding the unit-test file.
pub fn run_unit_test(
    manifest: &TechniqueManifest,
    doc: &UnitTestDoc,
    base_dir: &Path,
) -> Result<UnitResult, UnitTestError> {
    if doc.technique != manifest.technique_id {
        return Err(UnitTestError::UnknownTechnique {
            requested: doc.technique.clone(),
            actual: manifest.technique_id.clone(),
        });
    }
    let pipeline = compose_pipeline(manifest).map_err(|e| UnitTestError::Compose(e.to_string()))?;
    let last = match doc.op.as_str() {
        "pipeline" => None,
        name if pipeline.stages.iter().any(|s| s.name == name) => Some(name),
        name => return Err(UnitTestError::UnknownOp(name.to_string())),
    };
    let path = base_dir.join(&doc.input);
    let text = std::fs::read_to_string(&path).map_err(|e| UnitTestError::MissingInput {
        path: path.clone(),
        cause: e.to_string(),
    })?;
    let model = parse_app_model(&text).map_err(|e| UnitTestError::InvalidInput(e.to_string()))?;

    let started = Instant::now();
    let run = run_pipeline_until(&pipeline, &model, &RunOptions::default(), last);
    let execution_time_ms = started.elapsed().as_secs_f64() * 1000.0;

    let outcome = match run {
        Err(e) => Outcome::Fail(e.to_string()),
        Ok(artifacts) => {
            let actual = match doc.expect.kind {
                ExpectKind::ModelHash => artifacts
                    .instrumented_model
                    .as_ref()
                    .map(|m| Value::String(m.content_id().to_hex())),
                ExpectKind::Facts => match last {
                    Some(name) => artifacts
                        .facts
                        .get(name)
                        .map(|f| serde_json::to_value(f).expect("facts serialize")),
                    None => Some(serde_json::to_value(&artifacts.facts).expect("facts serialize")),
                },
                ExpectKind::OsPolicy => artifacts
                    .os_policy
                    .as_ref()
                    .map(|p| serde_json::to_value(p).expect("policy serializes")),
            };
            match actual {
                None => Outcome::Fail(format!("op `{}` produced no {:?} artifact", doc.op, doc.expect.kind)),
                Some(a) if a == doc.expect.value => Outcome::Pass,
                Some(a) => Outcome::Fail(format!("mismatch: expected {}, got {a}", doc.expect.value)),
            }
        }
    };
    Ok(UnitResult {
        id: doc.id.clone(),
        outcome,
        nfp: UnitNfp { execution_time_ms },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("accuracy of an empty result list")]
pub struct EmptyResults;

/// Fraction of passing results.
pub fn accuracy(results: &[UnitResult]) -> Result<Ratio, EmptyResults> {
    if results.is_empty() {
        return Err(EmptyResults);
    }
    let passes = results.iter().filter(|r| r.passed()).count();
    Ok(Ratio::new(passes as i64, results.len() as i64))
}
