use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{PrefetchPoint, TechniqueError};
use crate::model::{AppModel, Node, Op, Successors, ValueExpr};

/// Literal written by the fault instrumenter in place of the original value.
pub const FAULT_SENTINEL: &str = "FAULT";

/// Intent actions the instrumented OS refuses to deliver.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OsPolicy {
    pub blocked_intent_actions: BTreeSet<String>,
}

impl OsPolicy {
    pub fn blocks(&self, action: &str) -> bool {
        self.blocked_intent_actions.contains(action)
    }
}

/// Inserts a `prefetch(url)` node as the new entry of each point's callback.
pub fn prefetch_instrumenter(
    model: &AppModel,
    points: &[PrefetchPoint],
) -> Result<AppModel, TechniqueError> {
    let mut out = model.clone();
    for point in points {
        let cb = out
            .callback_mut(&point.callback)
            .ok_or_else(|| TechniqueError::UnknownCallback(point.callback.clone()))?;
        let id = cb.fresh_id("pf");
        let old_entry = std::mem::replace(&mut cb.entry, id.clone());
        cb.nodes.push(Node {
            id,
            op: Op::Prefetch {
                url: point.url.clone(),
            },
            succ: Successors::Next(old_entry),
        });
        cb.canonicalize();
    }
    Ok(out)
}

/// Puts a `log` node, tagged with the logged node's id, immediately before
/// every `ui_update` and `net_request`.
pub fn logger_instrumenter(model: &AppModel) -> AppModel {
    let mut out = model.clone();
    for cb in &mut out.callbacks {
        let logged: Vec<String> = cb
            .nodes
            .iter()
            .filter(|n| matches!(n.op, Op::UiUpdate { .. } | Op::NetRequest { .. }))
            .map(|n| n.id.clone())
            .collect();
        if logged.is_empty() {
            continue;
        }
        let mut redirect: BTreeMap<String, String> = BTreeMap::new();
        let mut log_nodes = Vec::new();
        for target in &logged {
            let id = cb.fresh_id(&format!("log.{target}"));
            redirect.insert(target.clone(), id.clone());
            log_nodes.push(Node {
                id,
                op: Op::Log {
                    tag: target.clone(),
                },
                succ: Successors::Next(target.clone()),
            });
        }
        let remap = |t: &mut String| {
            if let Some(new) = redirect.get(t.as_str()) {
                *t = new.clone();
            }
        };
        for node in &mut cb.nodes {
            match &mut node.succ {
                Successors::Next(t) => remap(t),
                Successors::Branch { then, otherwise } => {
                    remap(then);
                    remap(otherwise);
                }
                Successors::None => {}
            }
        }
        remap(&mut cb.entry);
        cb.nodes.extend(log_nodes);
        cb.canonicalize();
    }
    out
}

/// Replaces the value of the first (by node id) `ui_update` of `widget` in
/// `callback` with the fault sentinel.
pub fn fault_instrumenter(
    model: &AppModel,
    callback: &str,
    widget: &str,
) -> Result<AppModel, TechniqueError> {
    let mut out = model.clone();
    let cb = out
        .callback_mut(callback)
        .ok_or_else(|| TechniqueError::UnknownCallback(callback.to_string()))?;
    cb.canonicalize();
    let target = cb
        .nodes
        .iter_mut()
        .find(|n| matches!(&n.op, Op::UiUpdate { widget: w, .. } if w == widget))
        .ok_or_else(|| TechniqueError::NoMatchingUiUpdate {
            callback: callback.to_string(),
            widget: widget.to_string(),
        })?;
    if let Op::UiUpdate { value, .. } = &mut target.op {
        *value = ValueExpr::Lit(FAULT_SENTINEL.to_string());
    }
    Ok(out)
}

/// Builds the policy from the comma-separated `blocked` key (absent = none).
pub fn os_policy_instrumenter(config: &BTreeMap<String, String>) -> OsPolicy {
    let blocked_intent_actions = config
        .get("blocked")
        .map(|s| {
            s.split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    OsPolicy {
        blocked_intent_actions,
    }
}
