use std::collections::{BTreeMap, BTreeSet};

use super::profile::DeviceProfile;
use super::trace::*;
use crate::digest::{fnv1a64, Digest64};
use crate::model::{AppModel, Op, Successors, UrlExpr, UrlPart, ValueExpr};
use crate::rational::Ratio;
use crate::techniques::OsPolicy;
use crate::testgen::path_id;

pub const STEP_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("unknown callback `{0}`")]
    UnknownCallback(String),
    #[error("callback `{callback}`: no input for parameter `{param}`")]
    MissingInput { callback: String, param: String },
}

/// Simulated response body for `url`.
pub fn response_content(url: &str) -> String {
    fnv1a64(url.as_bytes()).to_hex()
}

/// Response sizes of literal-URL requests in `model`, used as the size of a
/// prefetch of the same URL. The first request in callback and node order wins.
pub fn response_catalogue(model: &AppModel) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for cb in &model.callbacks {
        for node in &cb.nodes {
            if let Op::NetRequest { url, resp_bytes, .. } = &node.op {
                if let Some(u) = url.resolved() {
                    out.entry(u).or_insert(*resp_bytes);
                }
            }
        }
    }
    out
}

/// Runs one callback from its entry on a fresh simulated clock.
pub fn execute_callback(
    model: &AppModel,
    callback: &str,
    inputs: &BTreeMap<String, i64>,
    profile: &DeviceProfile,
    policy: &OsPolicy,
    warm_cache: &BTreeSet<String>,
) -> Result<RunTrace, ExecError> {
    let cb = model
        .callback(callback)
        .ok_or_else(|| ExecError::UnknownCallback(callback.to_string()))?;
    for p in &cb.params {
        if !inputs.contains_key(p) {
            return Err(ExecError::MissingInput {
                callback: callback.to_string(),
                param: p.clone(),
            });
        }
    }
    let catalogue = response_catalogue(model);
    let mut cache: BTreeSet<String> = warm_cache.clone();
    let mut responses: BTreeSet<String> = warm_cache.clone();
    let mut clock = 0u64;
    let (mut net_bytes, mut net_requests, mut cache_hits) = (0u64, 0u64, 0u64);
    let mut executed: Vec<String> = Vec::new();
    let mut ui_checkpoints = Vec::new();
    let mut net_events = Vec::new();
    let mut intent_events = Vec::new();
    let mut termination = Termination::Normal;
    let render_url = |u: &UrlExpr| -> String {
        u.parts
            .iter()
            .map(|p| match p {
                UrlPart::Lit(s) => s.clone(),
                UrlPart::Var(v) => inputs[v].to_string(),
            })
            .collect()
    };

    let mut at = cb.entry.as_str();
    loop {
        if executed.len() == STEP_BUDGET {
            termination = Termination::Error(ExecFault::BudgetExhausted);
            break;
        }
        let node = cb.node(at).expect("validated model");
        executed.push(node.id.clone());
        let mut next = match &node.succ {
            Successors::Next(n) => Some(n.as_str()),
            _ => None,
        };
        match &node.op {
            Op::Compute { cost_ms } => clock += profile.cpu_factor.mul_ceil(*cost_ms),
            Op::Branch { var, cmp, constant } => {
                let Successors::Branch { then, otherwise } = &node.succ else {
                    unreachable!("validated model")
                };
                next = Some(if cmp.eval(inputs[var], *constant) {
                    then.as_str()
                } else {
                    otherwise.as_str()
                });
            }
            Op::UiUpdate { widget, value } => {
                let rendered = match value {
                    ValueExpr::Lit(s) => s.clone(),
                    ValueExpr::Var(v) => inputs[v].to_string(),
                    ValueExpr::Resp(u) if responses.contains(u) => response_content(u),
                    ValueExpr::Resp(_) => {
                        termination = Termination::Error(ExecFault::UninitializedResponse);
                        break;
                    }
                };
                clock += 1;
                ui_checkpoints.push(UiCheckpoint {
                    seq: ui_checkpoints.len(),
                    digest: Digest64::of_str(&format!("{widget}={rendered}")),
                    widget: widget.clone(),
                    value: rendered,
                });
            }
            Op::NetRequest {
                url,
                resp_bytes,
                cacheable,
            } => {
                let u = render_url(url);
                net_requests += 1;
                let start = clock;
                let (outcome, bytes) = if cache.contains(&u) {
                    cache_hits += 1;
                    clock += profile.cache_hit_ms;
                    (NetOutcome::CacheHit, 0)
                } else {
                    let bits = u128::from(*resp_bytes) * 8;
                    let bw = u128::from(profile.net_bandwidth_kbps);
                    clock += profile.net_latency_ms + bits.div_ceil(bw) as u64;
                    net_bytes += resp_bytes;
                    if *cacheable {
                        cache.insert(u.clone());
                    }
                    responses.insert(u.clone());
                    (NetOutcome::Fetched, *resp_bytes)
                };
                net_events.push(NetEvent {
                    node: node.id.clone(),
                    url: u,
                    outcome,
                    bytes,
                    at_ms: start,
                });
            }
            Op::Prefetch { url } => {
                let bytes = catalogue.get(url).copied().unwrap_or(0);
                let min = Ratio::from_integer(i64::from(profile.prefetch_battery_min));
                let outcome = if profile.battery_at(clock) >= min {
                    net_bytes += bytes;
                    cache.insert(url.clone());
                    responses.insert(url.clone());
                    NetOutcome::Prefetched
                } else {
                    NetOutcome::PrefetchSkipped
                };
                net_events.push(NetEvent {
                    node: node.id.clone(),
                    url: url.clone(),
                    outcome,
                    bytes: if outcome == NetOutcome::Prefetched { bytes } else { 0 },
                    at_ms: clock,
                });
            }
            Op::Log { .. } => clock += 1,
            Op::SendIntent { action } => {
                clock += 1;
                intent_events.push(IntentEvent {
                    node: node.id.clone(),
                    action: action.clone(),
                    status: if policy.blocks(action) {
                        IntentStatus::Blocked
                    } else {
                        IntentStatus::Delivered
                    },
                });
            }
            Op::Exit => break,
        }
        at = next.expect("validated model");
    }

    let nfp = BTreeMap::from([
        ("sim_time_ms".to_string(), clock),
        ("net_bytes".to_string(), net_bytes),
        ("net_requests".to_string(), net_requests),
        ("cache_hits".to_string(), cache_hits),
    ]);
    Ok(RunTrace {
        callback: callback.to_string(),
        inputs: inputs.clone(),
        path_id: path_id(&executed),
        executed,
        ui_checkpoints,
        nfp,
        entry_clock: 0,
        exit_clock: clock,
        net_events,
        intent_events,
        termination,
    })
}
