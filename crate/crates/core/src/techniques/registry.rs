use crate::arch::ComponentKind;

/// What a pipeline stage consumes or produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Ir,
    UrlFacts,
    PrefetchPoints,
    Model,
    Policy,
}

impl ArtifactKind {
    pub fn describe(self) -> &'static str {
        match self {
            ArtifactKind::Ir => "an intermediate representation",
            ArtifactKind::UrlFacts => "url facts",
            ArtifactKind::PrefetchPoints => "prefetch points",
            ArtifactKind::Model => "an app model",
            ArtifactKind::Policy => "an OS policy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    CcfgIr,
    StringAnalyzer,
    CallbackAnalyzer,
    PrefetchInstrumenter,
    LoggerInstrumenter,
    FaultInstrumenter,
    OsPolicy,
    ProxyCache,
    DeviceMonitor,
}

impl Builtin {
    pub const ALL: [Builtin; 9] = [
        Builtin::CcfgIr,
        Builtin::StringAnalyzer,
        Builtin::CallbackAnalyzer,
        Builtin::PrefetchInstrumenter,
        Builtin::LoggerInstrumenter,
        Builtin::FaultInstrumenter,
        Builtin::OsPolicy,
        Builtin::ProxyCache,
        Builtin::DeviceMonitor,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Builtin::CcfgIr => "ccfg_ir",
            Builtin::StringAnalyzer => "string_analyzer",
            Builtin::CallbackAnalyzer => "callback_analyzer",
            Builtin::PrefetchInstrumenter => "prefetch_instrumenter",
            Builtin::LoggerInstrumenter => "logger_instrumenter",
            Builtin::FaultInstrumenter => "fault_instrumenter",
            Builtin::OsPolicy => "os_policy",
            Builtin::ProxyCache => "proxy_cache",
            Builtin::DeviceMonitor => "device_monitor",
        }
    }

    pub fn from_id(id: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.id() == id)
    }

    pub fn kind(self) -> ComponentKind {
        match self {
            Builtin::CcfgIr => ComponentKind::IntermediateRepresenter,
            Builtin::StringAnalyzer | Builtin::CallbackAnalyzer => ComponentKind::StaticAnalyzer,
            Builtin::PrefetchInstrumenter
            | Builtin::LoggerInstrumenter
            | Builtin::FaultInstrumenter => ComponentKind::AppInstrumenter,
            Builtin::OsPolicy => ComponentKind::OsInstrumenter,
            Builtin::ProxyCache => ComponentKind::BackendService,
            Builtin::DeviceMonitor => ComponentKind::DeviceMonitor,
        }
    }

    /// Artifact the component must read from an earlier stage.
    pub fn requires(self) -> Option<ArtifactKind> {
        match self {
            Builtin::StringAnalyzer => Some(ArtifactKind::Ir),
            Builtin::CallbackAnalyzer => Some(ArtifactKind::UrlFacts),
            Builtin::PrefetchInstrumenter => Some(ArtifactKind::PrefetchPoints),
            _ => None,
        }
    }

    pub fn produces(self) -> Option<ArtifactKind> {
        match self {
            Builtin::CcfgIr => Some(ArtifactKind::Ir),
            Builtin::StringAnalyzer => Some(ArtifactKind::UrlFacts),
            Builtin::CallbackAnalyzer => Some(ArtifactKind::PrefetchPoints),
            Builtin::PrefetchInstrumenter
            | Builtin::LoggerInstrumenter
            | Builtin::FaultInstrumenter => Some(ArtifactKind::Model),
            Builtin::OsPolicy => Some(ArtifactKind::Policy),
            Builtin::ProxyCache | Builtin::DeviceMonitor => None,
        }
    }

    /// Accepted config keys; `reads` is accepted by every consumer.
    pub fn config_keys(self) -> &'static [&'static str] {
        match self {
            Builtin::CcfgIr | Builtin::LoggerInstrumenter => &[],
            Builtin::StringAnalyzer
            | Builtin::CallbackAnalyzer
            | Builtin::PrefetchInstrumenter => &["reads"],
            Builtin::FaultInstrumenter => &["callback", "widget"],
            Builtin::OsPolicy => &["blocked"],
            Builtin::ProxyCache => &["cache_hit_ms"],
            Builtin::DeviceMonitor => &["prefetch_battery_min"],
        }
    }

    pub fn required_config_keys(self) -> &'static [&'static str] {
        match self {
            Builtin::FaultInstrumenter => &["callback", "widget"],
            _ => &[],
        }
    }
}
