use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use super::manifest::{ComponentKind, InstrumenterMode, TechniqueManifest};
use crate::model::{model_to_value, AppModel};
use crate::techniques::{
    callback_analyzer, ccfg_ir, fault_instrumenter, logger_instrumenter, os_policy_instrumenter,
    prefetch_instrumenter, string_analyzer, ArtifactKind, Builtin, CcfgIr, OsPolicy,
    PrefetchPoint, TechniqueError, UrlFact,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub name: String,
    pub builtin: Builtin,
    pub mode: InstrumenterMode,
    pub config: BTreeMap<String, String>,
    /// Earlier stages this one reads from.
    pub inputs: Vec<String>,
}

/// An executable, ordered set of stages plus the runtime configuration
/// contributed by device monitors and backend services.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pipeline {
    pub technique_id: String,
    pub stages: Vec<Stage>,
    pub runtime: Option<BTreeMap<String, String>>,
}

impl Pipeline {
    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComposeError {
    #[error("ordering violation: `{component}` must come after `{after}`")]
    OrderingViolation { component: String, after: String },
    #[error("`{component}` reads from `{source_name}`, which does not produce {expected}")]
    WrongInput {
        component: String,
        source_name: String,
        expected: &'static str,
    },
}

pub fn compose_pipeline(manifest: &TechniqueManifest) -> Result<Pipeline, ComposeError> {
    let mut stages = Vec::new();
    let mut runtime: Option<BTreeMap<String, String>> = None;
    let comps = &manifest.components;
    for (i, c) in comps.iter().enumerate() {
        if c.kind.is_runtime() {
            runtime
                .get_or_insert_with(BTreeMap::new)
                .extend(c.config.clone());
            continue;
        }
        let builtin = c.builtin();
        let manual = c.mode() == InstrumenterMode::Manual && c.kind == ComponentKind::AppInstrumenter;
        let mut inputs = Vec::new();
        if let (Some(required), false) = (builtin.requires(), manual) {
            match c.config.get("reads") {
                Some(reads) => {
                    for src in reads.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let pos = comps.iter().position(|d| d.name == src);
                        match pos {
                            Some(j) if j < i => {
                                if comps[j].builtin().produces() != Some(required) {
                                    return Err(ComposeError::WrongInput {
                                        component: c.name.clone(),
                                        source_name: src.to_string(),
                                        expected: required.describe(),
                                    });
                                }
                                inputs.push(src.to_string());
                            }
                            _ => {
                                return Err(ComposeError::OrderingViolation {
                                    component: c.name.clone(),
                                    after: src.to_string(),
                                })
                            }
                        }
                    }
                }
                None => {
                    let produces = |d: &super::ComponentDecl| {
                        !d.kind.is_runtime() && d.builtin().produces() == Some(required)
                    };
                    if let Some(src) = comps[..i].iter().rev().find(|d| produces(d)) {
                        inputs.push(src.name.clone());
                    } else {
                        let after = comps[i + 1..]
                            .iter()
                            .find(|d| produces(d))
                            .map(|d| d.name.clone())
                            .unwrap_or_else(|| producer_kind(required).to_string());
                        return Err(ComposeError::OrderingViolation {
                            component: c.name.clone(),
                            after,
                        });
                    }
                }
            }
        }
        stages.push(Stage {
            name: c.name.clone(),
            builtin,
            mode: c.mode(),
            config: c.config.clone(),
            inputs,
        });
    }
    Ok(Pipeline {
        technique_id: manifest.technique_id.clone(),
        stages,
        runtime,
    })
}

fn producer_kind(kind: ArtifactKind) -> ComponentKind {
    match kind {
        ArtifactKind::Ir => ComponentKind::IntermediateRepresenter,
        ArtifactKind::UrlFacts | ArtifactKind::PrefetchPoints => ComponentKind::StaticAnalyzer,
        ArtifactKind::Model => ComponentKind::AppInstrumenter,
        ArtifactKind::Policy => ComponentKind::OsInstrumenter,
    }
}

/// Analysis facts produced by one static analyzer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum FactSet {
    Urls(Vec<UrlFact>),
    PrefetchPoints(Vec<PrefetchPoint>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PipelineArtifacts {
    pub ir: Option<CcfgIr>,
    pub facts: BTreeMap<String, FactSet>,
    #[serde(serialize_with = "ser_model")]
    pub instrumented_model: Option<AppModel>,
    pub os_policy: Option<OsPolicy>,
    pub backend_config: Option<BTreeMap<String, String>>,
}

fn ser_model<S: Serializer>(m: &Option<AppModel>, s: S) -> Result<S::Ok, S::Error> {
    m.as_ref().map(model_to_value).serialize(s)
}

impl PipelineArtifacts {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifacts always serialize");
        s.push('\n');
        s
    }
}

/// Extra inputs for a pipeline run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Instrumented model supplied by hand for manual-mode instrumenters.
    pub manual_model: Option<AppModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("stage `{stage}` failed: {cause}")]
pub struct PipelineError {
    pub stage: String,
    pub cause: String,
}

pub fn run_pipeline(
    pipeline: &Pipeline,
    model: &AppModel,
    options: &RunOptions,
) -> Result<PipelineArtifacts, PipelineError> {
    run_pipeline_until(pipeline, model, options, None)
}

/// Runs stages in order, stopping after `last` when given.
pub fn run_pipeline_until(
    pipeline: &Pipeline,
    model: &AppModel,
    options: &RunOptions,
    last: Option<&str>,
) -> Result<PipelineArtifacts, PipelineError> {
    let mut irs: BTreeMap<String, CcfgIr> = BTreeMap::new();
    let mut out = PipelineArtifacts {
        backend_config: pipeline.runtime.clone(),
        ..Default::default()
    };
    for stage in &pipeline.stages {
        let fail = |cause: String| PipelineError {
            stage: stage.name.clone(),
            cause,
        };
        let tech = |e: TechniqueError| fail(e.to_string());
        let current = out.instrumented_model.as_ref().unwrap_or(model);
        let manual_app = stage.mode == InstrumenterMode::Manual
            && stage.builtin.kind() == ComponentKind::AppInstrumenter;
        if manual_app {
            if let Some(m) = &options.manual_model {
                m.validate().map_err(|v| {
                    fail(format!("manual model is invalid: {}", v[0]))
                })?;
                out.instrumented_model = Some(m.clone());
            }
        } else {
            match stage.builtin {
                Builtin::CcfgIr => {
                    let ir = ccfg_ir(current);
                    irs.insert(stage.name.clone(), ir.clone());
                    out.ir = Some(ir);
                }
                Builtin::StringAnalyzer => {
                    let ir = stage
                        .inputs
                        .iter()
                        .find_map(|n| irs.get(n))
                        .ok_or_else(|| fail("no intermediate representation available".into()))?;
                    let facts = string_analyzer(current, ir);
                    out.facts.insert(stage.name.clone(), FactSet::Urls(facts));
                }
                Builtin::CallbackAnalyzer => {
                    let mut facts = Vec::new();
                    for input in &stage.inputs {
                        match out.facts.get(input) {
                            Some(FactSet::Urls(f)) => facts.extend(f.iter().cloned()),
                            _ => return Err(fail(format!("`{input}` produced no url facts"))),
                        }
                    }
                    let points = callback_analyzer(current, &facts);
                    out.facts
                        .insert(stage.name.clone(), FactSet::PrefetchPoints(points));
                }
                Builtin::PrefetchInstrumenter => {
                    let mut points = Vec::new();
                    for input in &stage.inputs {
                        match out.facts.get(input) {
                            Some(FactSet::PrefetchPoints(p)) => points.extend(p.iter().cloned()),
                            _ => {
                                return Err(fail(format!("`{input}` produced no prefetch points")))
                            }
                        }
                    }
                    out.instrumented_model =
                        Some(prefetch_instrumenter(current, &points).map_err(tech)?);
                }
                Builtin::LoggerInstrumenter => {
                    out.instrumented_model = Some(logger_instrumenter(current));
                }
                Builtin::FaultInstrumenter => {
                    let key = |k: &str| {
                        stage
                            .config
                            .get(k)
                            .cloned()
                            .ok_or_else(|| tech(TechniqueError::MissingConfig(k.into())))
                    };
                    let (cb, widget) = (key("callback")?, key("widget")?);
                    out.instrumented_model =
                        Some(fault_instrumenter(current, &cb, &widget).map_err(tech)?);
                }
                Builtin::OsPolicy => {
                    let policy = os_policy_instrumenter(&stage.config);
                    let merged = out.os_policy.get_or_insert_with(OsPolicy::default);
                    merged
                        .blocked_intent_actions
                        .extend(policy.blocked_intent_actions);
                }
                Builtin::ProxyCache | Builtin::DeviceMonitor => {
                    unreachable!("runtime components never become stages")
                }
            }
        }
        if let Some(m) = &out.instrumented_model {
            if let Err(v) = m.validate() {
                return Err(fail(format!("instrumented model is invalid: {}", v[0])));
            }
        }
        if last == Some(stage.name.as_str()) {
            break;
        }
    }
    Ok(out)
}
