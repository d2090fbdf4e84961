use std::collections::BTreeSet;

use serde::Serialize;

use super::CcfgIr;
use crate::model::{AppModel, Op, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlFact {
    pub callback: String,
    pub node: String,
    pub resolution: UrlResolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlResolution {
    Resolved(String),
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefetchPoint {
    pub callback: String,
    pub url: String,
}

/// One fact per `net_request` node: the concatenated URL when every part is
/// literal, otherwise dynamic.
pub fn string_analyzer(model: &AppModel, ir: &CcfgIr) -> Vec<UrlFact> {
    let mut facts = Vec::new();
    for cb in &model.callbacks {
        let has_requests = ir
            .callback(&cb.name)
            .is_none_or(|c| c.op_kinds.contains(&OpKind::NetRequest));
        if !has_requests {
            continue;
        }
        let mut nodes: Vec<_> = cb.nodes.iter().collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for node in nodes {
            if let Op::NetRequest { url, .. } = &node.op {
                let resolution = match url.resolved() {
                    Some(u) => UrlResolution::Resolved(u),
                    None => UrlResolution::Dynamic,
                };
                facts.push(UrlFact {
                    callback: cb.name.clone(),
                    node: node.id.clone(),
                    resolution,
                });
            }
        }
    }
    facts
}

/// Prefetch points: (callback, url) for every cacheable request with a
/// resolved URL, duplicates collapsed, first-seen order kept.
pub fn callback_analyzer(model: &AppModel, facts: &[UrlFact]) -> Vec<PrefetchPoint> {
    let mut seen = BTreeSet::new();
    let mut points = Vec::new();
    for fact in facts {
        let UrlResolution::Resolved(url) = &fact.resolution else {
            continue;
        };
        let cacheable = model
            .callback(&fact.callback)
            .and_then(|cb| cb.node(&fact.node))
            .is_some_and(|n| matches!(n.op, Op::NetRequest { cacheable: true, .. }));
        if cacheable && seen.insert((fact.callback.clone(), url.clone())) {
            points.push(PrefetchPoint {
                callback: fact.callback.clone(),
                url: url.clone(),
            });
        }
    }
    points
}
