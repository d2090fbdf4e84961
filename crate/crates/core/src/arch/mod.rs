//! Technique manifests over the six reference component kinds, the
//! composer that turns a manifest into an ordered pipeline, and the runner.
//!
//! Ordering rules enforced by [`compose_pipeline`]:
//!
//! - a component that needs an artifact (IR, url facts, prefetch points)
//!   reads it from an earlier stage, either named by its `reads` config
//!   (comma-separated component names) or the nearest earlier producer;
//! - device monitors and backend services never become stages; their config
//!   is merged into [`Pipeline::runtime`] and consumed by the executor;
//! - manual-mode app instrumenters are no-op stages whose output model is
//!   supplied through [`RunOptions::manual_model`]; OS policies are always
//!   declared in config, so manual OS instrumenters still emit theirs.

mod manifest;
mod pipeline;

pub use manifest::{
    load_manifest, manifest_from_value, serialize_manifest, ComponentDecl, ComponentKind,
    InstrumenterMode, ManifestError, TechniqueManifest,
};
pub use pipeline::{
    compose_pipeline, run_pipeline, run_pipeline_until, ComposeError, FactSet, Pipeline,
    PipelineArtifacts, PipelineError, RunOptions, Stage,
};
