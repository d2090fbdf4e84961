//! Built-in components covering all six reference kinds.
//!
//! | id                      | kind                     |
//! |-------------------------|--------------------------|
//! | `ccfg_ir`               | IntermediateRepresenter  |
//! | `string_analyzer`       | StaticAnalyzer           |
//! | `callback_analyzer`     | StaticAnalyzer           |
//! | `prefetch_instrumenter` | AppInstrumenter          |
//! | `logger_instrumenter`   | AppInstrumenter          |
//! | `fault_instrumenter`    | AppInstrumenter          |
//! | `os_policy`             | OsInstrumenter           |
//! | `proxy_cache`           | BackendService           |
//! | `device_monitor`        | DeviceMonitor            |

mod analyzers;
mod instrumenters;
mod ir;
mod registry;

pub use analyzers::{callback_analyzer, string_analyzer, PrefetchPoint, UrlFact, UrlResolution};
pub use instrumenters::{
    fault_instrumenter, logger_instrumenter, os_policy_instrumenter, prefetch_instrumenter,
    OsPolicy, FAULT_SENTINEL,
};
pub use ir::{ccfg_ir, CallbackIr, CcfgIr};
pub use registry::{ArtifactKind, Builtin};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TechniqueError {
    #[error("unknown callback `{0}`")]
    UnknownCallback(String),
    #[error("callback `{callback}` has no ui_update for widget `{widget}`")]
    NoMatchingUiUpdate { callback: String, widget: String },
    #[error("missing config key `{0}`")]
    MissingConfig(String),
}

#[cfg(test)]
mod tests;
