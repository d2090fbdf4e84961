use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{AppModel, OpKind};

/// Callback control-flow graph IR: shape summary of every callback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CcfgIr {
    pub callbacks: Vec<CallbackIr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallbackIr {
    pub name: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub adjacency: BTreeMap<String, Vec<String>>,
    pub op_kinds: BTreeSet<OpKind>,
}

impl CcfgIr {
    pub fn callback(&self, name: &str) -> Option<&CallbackIr> {
        self.callbacks.iter().find(|c| c.name == name)
    }
}

pub fn ccfg_ir(model: &AppModel) -> CcfgIr {
    let callbacks = model
        .callbacks
        .iter()
        .map(|cb| {
            let adjacency: BTreeMap<String, Vec<String>> = cb
                .nodes
                .iter()
                .map(|n| {
                    let targets = n.targets().into_iter().map(str::to_string).collect();
                    (n.id.clone(), targets)
                })
                .collect();
            CallbackIr {
                name: cb.name.clone(),
                node_count: cb.nodes.len(),
                edge_count: adjacency.values().map(Vec::len).sum(),
                adjacency,
                op_kinds: cb.nodes.iter().map(|n| n.op.kind()).collect(),
            }
        })
        .collect();
    CcfgIr { callbacks }
}
