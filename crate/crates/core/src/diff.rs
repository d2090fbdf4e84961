//! Callback-granularity diff between an original app and its instrumented
//! version.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{canonical_hash, AppModel};

/// Every callback name of either app, in exactly one list. Lists are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallbackDiff {
    pub modified: Vec<String>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub unchanged: Vec<String>,
}

impl CallbackDiff {
    pub fn is_identity(&self) -> bool {
        self.modified.is_empty() && self.added.is_empty() && self.removed.is_empty()
    }

    /// Warnings for callbacks that only exist in the original; they get no tests.
    pub fn warnings(&self) -> Vec<String> {
        self.removed
            .iter()
            .map(|n| format!("callback `{n}` was removed by instrumentation; not tested"))
            .collect()
    }
}

/// A callback counts as modified when its canonical hash differs, so
/// parameter changes count too.
pub fn diff_apps(original: &AppModel, instrumented: &AppModel) -> CallbackDiff {
    let names: BTreeSet<&str> = original
        .callbacks
        .iter()
        .chain(&instrumented.callbacks)
        .map(|c| c.name.as_str())
        .collect();
    let mut diff = CallbackDiff::default();
    for name in names {
        let list = match (original.callback(name), instrumented.callback(name)) {
            (Some(a), Some(b)) if canonical_hash(a) == canonical_hash(b) => &mut diff.unchanged,
            (Some(_), Some(_)) => &mut diff.modified,
            (None, Some(_)) => &mut diff.added,
            (Some(_), None) => &mut diff.removed,
            (None, None) => unreachable!(),
        };
        list.push(name.to_string());
    }
    diff
}
