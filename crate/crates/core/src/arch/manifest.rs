use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::{fnv1a64, Digest64};
use crate::techniques::Builtin;

/// The six reference component kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    IntermediateRepresenter,
    StaticAnalyzer,
    AppInstrumenter,
    OsInstrumenter,
    DeviceMonitor,
    BackendService,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::IntermediateRepresenter,
        ComponentKind::StaticAnalyzer,
        ComponentKind::AppInstrumenter,
        ComponentKind::OsInstrumenter,
        ComponentKind::DeviceMonitor,
        ComponentKind::BackendService,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::IntermediateRepresenter => "IntermediateRepresenter",
            ComponentKind::StaticAnalyzer => "StaticAnalyzer",
            ComponentKind::AppInstrumenter => "AppInstrumenter",
            ComponentKind::OsInstrumenter => "OsInstrumenter",
            ComponentKind::DeviceMonitor => "DeviceMonitor",
            ComponentKind::BackendService => "BackendService",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ComponentKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_instrumenter(self) -> bool {
        matches!(
            self,
            ComponentKind::AppInstrumenter | ComponentKind::OsInstrumenter
        )
    }

    /// Runtime-only kinds contribute configuration, never a pipeline stage.
    pub fn is_runtime(self) -> bool {
        matches!(
            self,
            ComponentKind::DeviceMonitor | ComponentKind::BackendService
        )
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumenterMode {
    #[default]
    Automatic,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentDecl {
    pub name: String,
    pub kind: ComponentKind,
    #[serde(rename = "impl")]
    pub impl_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<InstrumenterMode>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub config: BTreeMap<String, String>,
}

impl ComponentDecl {
    pub fn builtin(&self) -> Builtin {
        Builtin::from_id(&self.impl_id).expect("manifest validated at load")
    }

    pub fn mode(&self) -> InstrumenterMode {
        self.mode.unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TechniqueManifest {
    pub technique_id: String,
    pub description: String,
    pub components: Vec<ComponentDecl>,
}

impl TechniqueManifest {
    pub fn component(&self, name: &str) -> Option<&ComponentDecl> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn content_id(&self) -> Digest64 {
        fnv1a64(serialize_manifest(self).as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("component `{component}`: unknown kind `{kind}`")]
    UnknownKind { component: String, kind: String },
    #[error("component `{component}`: unknown impl `{impl_id}`")]
    UnknownImpl { component: String, impl_id: String },
    #[error("component `{component}`: impl `{impl_id}` is a {actual}, not a {declared}")]
    KindMismatch {
        component: String,
        impl_id: String,
        declared: ComponentKind,
        actual: ComponentKind,
    },
    #[error("duplicate component name `{0}`")]
    DuplicateName(String),
    #[error("component `{0}`: mode is only valid for instrumenters")]
    ModeNotAllowed(String),
    #[error("component `{component}`: config key `{key}`: {reason}")]
    InvalidConfig {
        component: String,
        key: String,
        reason: String,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    technique_id: String,
    description: String,
    components: Vec<RawComponent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    name: String,
    kind: String,
    #[serde(rename = "impl")]
    impl_id: String,
    mode: Option<InstrumenterMode>,
    #[serde(default)]
    config: BTreeMap<String, String>,
}

pub fn load_manifest(text: &str) -> Result<TechniqueManifest, ManifestError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ManifestError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    manifest_from_value(value)
}

pub fn manifest_from_value(value: serde_json::Value) -> Result<TechniqueManifest, ManifestError> {
    let raw: RawManifest =
        serde_json::from_value(value).map_err(|e| ManifestError::Malformed(e.to_string()))?;
    let mut names = BTreeSet::new();
    let mut components = Vec::with_capacity(raw.components.len());
    for c in raw.components {
        if !names.insert(c.name.clone()) {
            return Err(ManifestError::DuplicateName(c.name));
        }
        let kind = ComponentKind::parse(&c.kind).ok_or_else(|| ManifestError::UnknownKind {
            component: c.name.clone(),
            kind: c.kind.clone(),
        })?;
        let builtin = Builtin::from_id(&c.impl_id).ok_or_else(|| ManifestError::UnknownImpl {
            component: c.name.clone(),
            impl_id: c.impl_id.clone(),
        })?;
        if builtin.kind() != kind {
            return Err(ManifestError::KindMismatch {
                component: c.name,
                impl_id: c.impl_id,
                declared: kind,
                actual: builtin.kind(),
            });
        }
        if c.mode.is_some() && !kind.is_instrumenter() {
            return Err(ManifestError::ModeNotAllowed(c.name));
        }
        check_config(&c.name, builtin, &c.config)?;
        components.push(ComponentDecl {
            name: c.name,
            kind,
            impl_id: c.impl_id,
            mode: c.mode,
            config: c.config,
        });
    }
    Ok(TechniqueManifest {
        technique_id: raw.technique_id,
        description: raw.description,
        components,
    })
}

fn check_config(
    component: &str,
    builtin: Builtin,
    config: &BTreeMap<String, String>,
) -> Result<(), ManifestError> {
    let bad = |key: &str, reason: &str| ManifestError::InvalidConfig {
        component: component.to_string(),
        key: key.to_string(),
        reason: reason.to_string(),
    };
    for key in config.keys() {
        if !builtin.config_keys().contains(&key.as_str()) {
            return Err(bad(key, &format!("not accepted by `{}`", builtin.id())));
        }
    }
    for key in builtin.required_config_keys() {
        if !config.contains_key(*key) {
            return Err(bad(key, "required"));
        }
    }
    if let Some(v) = config.get("cache_hit_ms") {
        v.parse::<u64>()
            .map_err(|_| bad("cache_hit_ms", "expected a non-negative integer"))?;
    }
    if let Some(v) = config.get("prefetch_battery_min") {
        match v.parse::<u8>() {
            Ok(n) if n <= 100 => {}
            _ => return Err(bad("prefetch_battery_min", "expected an integer in 0..=100")),
        }
    }
    Ok(())
}

/// Canonical manifest text (fixed key order, pretty, trailing newline).
pub fn serialize_manifest(manifest: &TechniqueManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest always serializes");
    s.push('\n');
    s
}
