use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::{RunEnv, Script, Source, StmtKind};
use crate::arch::{
    compose_pipeline, load_manifest, manifest_from_value, run_pipeline, Pipeline, RunOptions,
    TechniqueManifest,
};
use crate::compare::{difftest, DiffReport, DifftestOptions};
use crate::digest::{fnv1a64, Digest64};
use crate::exec::{parse_unit_test, run_unit_test, Outcome};
use crate::model::{app_model_from_value, parse_app_model, serialize_app_model, AppModel};
use crate::repo::Pool;
use crate::techniques::OsPolicy;
use crate::testgen::GenConfig;

/// Where script sources come from.
pub trait Resolver {
    /// Text of a file source and the path it was read from.
    fn read_file(&self, path: &str) -> Result<(String, PathBuf), String>;
    /// Payload of a pool entry.
    fn pool_payload(&self, pool: Pool, id: &str) -> Result<Value, String>;
}

/// Files relative to a workspace directory; pool references go to `pools`
/// when given.
pub struct FileResolver<'a> {
    pub workspace: PathBuf,
    pub pools: Option<&'a dyn Resolver>,
}

impl Resolver for FileResolver<'_> {
    fn read_file(&self, path: &str) -> Result<(String, PathBuf), String> {
        let full = self.workspace.join(path);
        std::fs::read_to_string(&full)
            .map(|t| (t, full.clone()))
            .map_err(|e| format!("cannot read `{}`: {e}", full.display()))
    }

    fn pool_payload(&self, pool: Pool, id: &str) -> Result<Value, String> {
        match self.pools {
            Some(p) => p.pool_payload(pool, id),
            None => Err(format!("`pool:{id}` needs a repository")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatementResult {
    Environment,
    Monitor {
        metrics: Vec<String>,
    },
    Benchmark {
        alias: String,
        model: Digest64,
    },
    Technique {
        alias: String,
        technique_id: String,
        manifest: Digest64,
    },
    Apply {
        alias: String,
        technique: String,
        benchmark: String,
        model: Digest64,
        #[serde(skip_serializing_if = "Option::is_none")]
        os_policy: Option<OsPolicy>,
        #[serde(skip_serializing_if = "Option::is_none")]
        runtime: Option<BTreeMap<String, String>>,
    },
    Unittest {
        technique: String,
        test_id: String,
        outcome: Outcome,
    },
    Difftest {
        name: String,
        report: DiffReport,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptBody {
    pub environment: RunEnv,
    pub results: Vec<StatementResult>,
    /// Passing fraction over all unit-test statements; null without any.
    pub unit_accuracy: Option<f64>,
}

/// Measurements that differ between otherwise identical runs. Kept out of
/// the digest.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WallClock {
    /// Technique execution time per unit-test statement index.
    pub unit_execution_time_ms: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptReport {
    #[serde(flatten)]
    pub body: ScriptBody,
    pub wall_clock: WallClock,
    pub digest: Digest64,
}

impl ScriptReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }

    /// Every unit test and every compared difftest case passed.
    pub fn all_passed(&self) -> bool {
        self.body.results.iter().all(|r| match r {
            StatementResult::Unittest { outcome, .. } => *outcome == Outcome::Pass,
            StatementResult::Difftest { report, .. } => report.all_passed(),
            _ => true,
        })
    }
}

/// A finished run: the report plus every file of its run directory.
#[derive(Debug, Clone)]
pub struct ScriptRun {
    pub run_id: Digest64,
    pub report: ScriptReport,
    /// Paths relative to the run directory.
    pub files: BTreeMap<PathBuf, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("statement {} (line {line}, {keyword}): {message}", index + 1)]
pub struct ScriptError {
    pub index: usize,
    pub line: usize,
    pub keyword: &'static str,
    pub message: String,
}

struct ModelSlot {
    model: AppModel,
    os_policy: Option<OsPolicy>,
    runtime: Option<BTreeMap<String, String>>,
}

struct TechniqueSlot {
    manifest: TechniqueManifest,
    pipeline: Pipeline,
}

fn file_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

/// Identifier of a run: digest of the script's canonical text digest, the
/// final environment and the crate version.
pub fn run_id(script: &Script) -> Digest64 {
    let text = super::format_script(script);
    let env = serde_json::to_string(&script.final_env()).expect("env serializes");
    fnv1a64(
        format!("{}\n{env}\n{}", fnv1a64(text.as_bytes()), env!("CARGO_PKG_VERSION")).as_bytes(),
    )
}

/// Executes the statements in order.
pub fn run_script(script: &Script, resolver: &dyn Resolver) -> Result<ScriptRun, ScriptError> {
    let mut env = RunEnv::default();
    let mut models: BTreeMap<String, ModelSlot> = BTreeMap::new();
    let mut techniques: BTreeMap<String, TechniqueSlot> = BTreeMap::new();
    let mut results = Vec::new();
    let mut wall = WallClock::default();
    let mut files = BTreeMap::new();
    let (mut unit_total, mut unit_passed) = (0usize, 0usize);
    files.insert(PathBuf::from("script.dscr"), super::format_script(script));

    for (index, st) in script.statements.iter().enumerate() {
        let fail = |message: String| ScriptError {
            index,
            line: st.span.line,
            keyword: st.kind.keyword(),
            message,
        };
        let result = match &st.kind {
            StmtKind::Environment(_) => {
                env.apply(&st.kind);
                StatementResult::Environment
            }
            StmtKind::Monitor(metrics) => {
                env.apply(&st.kind);
                StatementResult::Monitor {
                    metrics: metrics.clone(),
                }
            }
            StmtKind::Benchmark { alias, source } => {
                let model = match source {
                    Source::File(p) => {
                        let (text, _) = resolver.read_file(p).map_err(fail)?;
                        parse_app_model(&text).map_err(|e| fail(format!("`{p}`: {e}")))?
                    }
                    Source::Pool(id) => {
                        let v = resolver.pool_payload(Pool::Benchmarks, id).map_err(fail)?;
                        app_model_from_value(&v).map_err(|e| fail(format!("`pool:{id}`: {e}")))?
                    }
                };
                let id = model.content_id();
                models.insert(
                    alias.clone(),
                    ModelSlot {
                        model,
                        os_policy: None,
                        runtime: None,
                    },
                );
                StatementResult::Benchmark {
                    alias: alias.clone(),
                    model: id,
                }
            }
            StmtKind::Technique { alias, source } => {
                let manifest = match source {
                    Source::File(p) => {
                        let (text, _) = resolver.read_file(p).map_err(fail)?;
                        load_manifest(&text).map_err(|e| fail(format!("`{p}`: {e}")))?
                    }
                    Source::Pool(id) => {
                        let v = resolver.pool_payload(Pool::Microservices, id).map_err(fail)?;
                        manifest_from_value(v).map_err(|e| fail(format!("`pool:{id}`: {e}")))?
                    }
                };
                let pipeline = compose_pipeline(&manifest).map_err(|e| fail(e.to_string()))?;
                let r = StatementResult::Technique {
                    alias: alias.clone(),
                    technique_id: manifest.technique_id.clone(),
                    manifest: manifest.content_id(),
                };
                techniques.insert(alias.clone(), TechniqueSlot { manifest, pipeline });
                r
            }
            StmtKind::Apply {
                technique,
                benchmark,
                alias,
            } => {
                let t = &techniques[technique];
                let input = &models[benchmark].model;
                let artifacts =
                    run_pipeline(&t.pipeline, input, &RunOptions::default()).map_err(|e| fail(e.to_string()))?;
                let model = artifacts.instrumented_model.unwrap_or_else(|| input.clone());
                let id = model.content_id();
                files.insert(
                    PathBuf::from("models").join(format!("{}.app.json", file_name(alias))),
                    serialize_app_model(&model),
                );
                let r = StatementResult::Apply {
                    alias: alias.clone(),
                    technique: technique.clone(),
                    benchmark: benchmark.clone(),
                    model: id,
                    os_policy: artifacts.os_policy.clone(),
                    runtime: artifacts.backend_config.clone(),
                };
                models.insert(
                    alias.clone(),
                    ModelSlot {
                        model,
                        os_policy: artifacts.os_policy,
                        runtime: artifacts.backend_config,
                    },
                );
                r
            }
            StmtKind::UnitTest { source, technique } => {
                let Source::File(p) = source else {
                    return Err(fail("unit tests are read from files, not pools".into()));
                };
                let (text, path) = resolver.read_file(p).map_err(fail)?;
                let doc = parse_unit_test(&text).map_err(|e| fail(e.to_string()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                let r = run_unit_test(&techniques[technique].manifest, &doc, &base)
                    .map_err(|e| fail(e.to_string()))?;
                unit_total += 1;
                unit_passed += usize::from(r.passed());
                wall.unit_execution_time_ms.insert(index, r.nfp.execution_time_ms);
                StatementResult::Unittest {
                    technique: technique.clone(),
                    test_id: r.id,
                    outcome: r.outcome,
                }
            }
            StmtKind::DiffTest {
                name,
                original,
                instrumented,
                bound,
                max_paths,
                perf_tolerance,
            } => {
                let orig = &models[original];
                let instr = &models[instrumented];
                let options = DifftestOptions {
                    profile: env.profile.clone(),
                    gen: GenConfig {
                        loop_bound: bound.unwrap_or(env.loop_bound),
                        max_paths: max_paths.unwrap_or(env.max_paths),
                        ..GenConfig::default()
                    },
                    perf_tolerance: perf_tolerance.unwrap_or(env.perf_tolerance),
                    monitor: env.monitor.clone(),
                    os_policy: instr.os_policy.clone(),
                    instrumented_runtime: instr.runtime.clone(),
                };
                let run = difftest(&orig.model, &instr.model, &options).map_err(|e| fail(e.to_string()))?;
                let dir = PathBuf::from("traces").join(file_name(name));
                files.insert(dir.join("suite.json"), run.report.body.suite.to_json());
                for pair in &run.traces {
                    let stem = file_name(&pair.test_id);
                    if let Some(o) = &pair.original {
                        files.insert(dir.join(format!("{stem}.original.trace.json")), o.to_json());
                    }
                    files.insert(
                        dir.join(format!("{stem}.instrumented.trace.json")),
                        pair.instrumented.to_json(),
                    );
                }
                StatementResult::Difftest {
                    name: name.clone(),
                    report: run.report,
                }
            }
        };
        results.push(result);
    }

    let body = ScriptBody {
        environment: env,
        results,
        unit_accuracy: (unit_total > 0).then(|| unit_passed as f64 / unit_total as f64),
    };
    let report = ScriptReport {
        digest: crate::compare::body_digest(&body),
        body,
        wall_clock: wall,
    };
    files.insert(PathBuf::from("report.json"), report.to_json());
    Ok(ScriptRun {
        run_id: run_id(script),
        report,
        files,
    })
}

/// Writes the run to `<root>/runs/<run_id>/` and returns that directory.
pub fn write_run(run: &ScriptRun, root: &Path) -> std::io::Result<PathBuf> {
    let dir = root.join("runs").join(run.run_id.to_hex());
    std::fs::create_dir_all(dir.join("traces"))?;
    for (rel, contents) in &run.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, contents)?;
    }
    Ok(dir)
}
