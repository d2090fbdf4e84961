//! The app model: an app is a list of named callbacks, each a small
//! control-flow graph of statements.
//!
//! Documents are JSON (`.app.json`). [`parse_app_model`] decodes and fully
//! validates a document; [`serialize_app_model`] emits the canonical form
//! (callbacks in declaration order, nodes sorted by id, fixed key order,
//! two-space indentation, trailing newline). Parsed models are held in
//! canonical node order, so `parse(serialize(m)) == m`.

mod codec;
mod validate;

use std::fmt;

use serde::Serialize;

use crate::digest::{fnv1a64, Digest64};

pub use codec::{app_model_from_value, parse_app_model, serialize_app_model, ModelError};
pub(crate) use codec::model_to_value;
pub use validate::Violation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppModel {
    pub app_id: String,
    pub version: String,
    pub callbacks: Vec<Callback>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Callback {
    pub name: String,
    pub params: Vec<String>,
    pub entry: String,
    pub nodes: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub op: Op,
    pub succ: Successors,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Successors {
    Next(String),
    Branch { then: String, otherwise: String },
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Op {
    Compute {
        cost_ms: u64,
    },
    Branch {
        var: String,
        cmp: Cmp,
        #[serde(rename = "const")]
        constant: i64,
    },
    UiUpdate {
        widget: String,
        value: ValueExpr,
    },
    NetRequest {
        url: UrlExpr,
        resp_bytes: u64,
        cacheable: bool,
    },
    Prefetch {
        url: String,
    },
    Log {
        tag: String,
    },
    SendIntent {
        action: String,
    },
    Exit,
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Compute { .. } => OpKind::Compute,
            Op::Branch { .. } => OpKind::Branch,
            Op::UiUpdate { .. } => OpKind::UiUpdate,
            Op::NetRequest { .. } => OpKind::NetRequest,
            Op::Prefetch { .. } => OpKind::Prefetch,
            Op::Log { .. } => OpKind::Log,
            Op::SendIntent { .. } => OpKind::SendIntent,
            Op::Exit => OpKind::Exit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Compute,
    Branch,
    UiUpdate,
    NetRequest,
    Prefetch,
    Log,
    SendIntent,
    Exit,
}

impl OpKind {
    pub const ALL: [OpKind; 8] = [
        OpKind::Compute,
        OpKind::Branch,
        OpKind::UiUpdate,
        OpKind::NetRequest,
        OpKind::Prefetch,
        OpKind::Log,
        OpKind::SendIntent,
        OpKind::Exit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Compute => "compute",
            OpKind::Branch => "branch",
            OpKind::UiUpdate => "ui_update",
            OpKind::NetRequest => "net_request",
            OpKind::Prefetch => "prefetch",
            OpKind::Log => "log",
            OpKind::SendIntent => "send_intent",
            OpKind::Exit => "exit",
        }
    }

    pub fn parse(s: &str) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Single-variable comparison operator of a branch atom `var cmp const`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl Cmp {
    pub const ALL: [Cmp; 6] = [Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ne, Cmp::Gt, Cmp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Cmp> {
        Cmp::ALL.into_iter().find(|c| c.symbol() == s)
    }

    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Ge,
            Cmp::Le => Cmp::Gt,
            Cmp::Eq => Cmp::Ne,
            Cmp::Ne => Cmp::Eq,
            Cmp::Gt => Cmp::Le,
            Cmp::Ge => Cmp::Lt,
        }
    }

    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for Cmp {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct UrlExpr {
    pub parts: Vec<UrlPart>,
}

impl UrlExpr {
    pub fn literal(url: impl Into<String>) -> Self {
        UrlExpr {
            parts: vec![UrlPart::Lit(url.into())],
        }
    }

    /// The URL when no part depends on an input.
    pub fn resolved(&self) -> Option<String> {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                UrlPart::Lit(s) => out.push_str(s),
                UrlPart::Var(_) => return None,
            }
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlPart {
    Lit(String),
    Var(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueExpr {
    Lit(String),
    Var(String),
    /// Digest of the most recent response received for this literal URL.
    Resp(String),
}

impl AppModel {
    pub fn callback(&self, name: &str) -> Option<&Callback> {
        self.callbacks.iter().find(|c| c.name == name)
    }

    pub fn callback_mut(&mut self, name: &str) -> Option<&mut Callback> {
        self.callbacks.iter_mut().find(|c| c.name == name)
    }

    /// Checks every invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        validate::validate_model(self)
    }

    /// Sorts every callback's nodes by id.
    pub fn canonicalize(&mut self) {
        for cb in &mut self.callbacks {
            cb.canonicalize();
        }
    }

    /// Content address of the whole model: digest of its canonical text.
    pub fn content_id(&self) -> Digest64 {
        fnv1a64(serialize_app_model(self).as_bytes())
    }
}

impl Callback {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn canonicalize(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
    }

    /// Returns an id not used by any node, derived from `base`.
    pub fn fresh_id(&self, base: &str) -> String {
        if self.node(base).is_none() {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}.{i}"))
            .find(|candidate| self.node(candidate).is_none())
            .expect("unbounded search")
    }

    /// Canonical single-callback text (nodes sorted by id).
    pub fn canonical_text(&self) -> String {
        codec::serialize_callback(self)
    }
}

impl Node {
    /// Outgoing edge targets, `then` before `else`.
    pub fn targets(&self) -> Vec<&str> {
        match &self.succ {
            Successors::Next(n) => vec![n.as_str()],
            Successors::Branch { then, otherwise } => vec![then.as_str(), otherwise.as_str()],
            Successors::None => Vec::new(),
        }
    }
}

/// Digest of the callback's canonical text. Invariant under node order,
/// sensitive to any op, edge or parameter change.
pub fn canonical_hash(callback: &Callback) -> Digest64 {
    fnv1a64(callback.canonical_text().as_bytes())
}
