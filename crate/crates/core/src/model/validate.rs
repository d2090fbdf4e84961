use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{AppModel, Callback, Op, UrlPart, ValueExpr};

/// One violated invariant, located by callback and node where possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

pub(crate) fn validate_model(model: &AppModel) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for cb in &model.callbacks {
        if !seen.insert(cb.name.as_str()) {
            out.push(Violation::new(
                format!("callback `{}`", cb.name),
                "duplicate callback name",
            ));
        }
        validate_callback(cb, &mut out);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn validate_callback(cb: &Callback, out: &mut Vec<Violation>) {
    let at = format!("callback `{}`", cb.name);
    let mut params = HashSet::new();
    for p in &cb.params {
        if !params.insert(p.as_str()) {
            out.push(Violation::new(&at, format!("duplicate param `{p}`")));
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in cb.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            out.push(Violation::new(
                format!("{at} node `{}`", n.id),
                "duplicate node id",
            ));
        }
    }

    if !index.contains_key(cb.entry.as_str()) {
        out.push(Violation::new(
            &at,
            format!("entry `{}` names no node", cb.entry),
        ));
    }

    for n in &cb.nodes {
        let nat = format!("{at} node `{}`", n.id);
        for target in n.targets() {
            if !index.contains_key(target) {
                out.push(Violation::new(
                    &nat,
                    format!("edge target `{target}` does not exist"),
                ));
            }
        }
        let succ_ok = matches!(
            (&n.op, &n.succ),
            (Op::Exit, super::Successors::None)
                | (Op::Branch { .. }, super::Successors::Branch { .. })
        ) || (!matches!(n.op, Op::Exit | Op::Branch { .. })
            && matches!(n.succ, super::Successors::Next(_)));
        if !succ_ok {
            out.push(Violation::new(&nat, "successor fields do not match op kind"));
        }
        let undeclared = |v: &str| !params.contains(v);
        match &n.op {
            Op::Branch { var, .. } if undeclared(var) => {
                out.push(Violation::new(
                    &nat,
                    format!("branch references undeclared variable `{var}`"),
                ));
            }
            Op::UiUpdate {
                value: ValueExpr::Var(var),
                ..
            } if undeclared(var) => {
                out.push(Violation::new(
                    &nat,
                    format!("value references undeclared variable `{var}`"),
                ));
            }
            Op::NetRequest { url, .. } => {
                if url.parts.is_empty() {
                    out.push(Violation::new(&nat, "url needs at least one part"));
                }
                for part in &url.parts {
                    if let UrlPart::Var(var) = part {
                        if undeclared(var) {
                            out.push(Violation::new(
                                &nat,
                                format!("url references undeclared variable `{var}`"),
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
    }

    let exits: BTreeSet<&str> = cb
        .nodes
        .iter()
        .filter(|n| matches!(n.op, Op::Exit))
        .map(|n| n.id.as_str())
        .collect();
    match exits.len() {
        0 => out.push(Violation::new(&at, "missing exit node")),
        1 => {}
        k => out.push(Violation::new(
            &at,
            format!("expected exactly one exit node, found {k}"),
        )),
    }
    if exits.len() == 1 && index.contains_key(cb.entry.as_str()) {
        let exit = *exits.iter().next().expect("len 1");
        if !reachable(cb, &index).contains(exit) {
            out.push(Violation::new(
                &at,
                format!("exit `{exit}` is not reachable from entry"),
            ));
        }
    }
}

fn reachable<'a>(cb: &'a Callback, index: &HashMap<&str, usize>) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    let mut stack = vec![cb.entry.as_str()];
    while let Some(id) = stack.pop() {
        let Some(&i) = index.get(id) else { continue };
        let node = &cb.nodes[i];
        if !seen.insert(node.id.as_str()) {
            continue;
        }
        stack.extend(node.targets());
    }
    seen
}
