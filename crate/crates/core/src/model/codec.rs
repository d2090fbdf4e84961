use serde::Serialize;
use serde_json::{Map, Value};

use super::validate::{validate_model, Violation};
use super::{AppModel, Callback, Cmp, Node, Op, OpKind, Successors, UrlExpr, UrlPart, ValueExpr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid app model:{}", render_violations(.0))]
    Invalid(Vec<Violation>),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  - {x}")).collect()
}

impl ModelError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ModelError::Invalid(v) => v,
            ModelError::Syntax { .. } => &[],
        }
    }
}

/// Parses and validates an app-model document.
pub fn parse_app_model(text: &str) -> Result<AppModel, ModelError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    app_model_from_value(&value)
}

/// Decodes and validates an app model already held as JSON.
pub fn app_model_from_value(value: &Value) -> Result<AppModel, ModelError> {
    let mut d = Decoder::default();
    let model = d.model(value);
    if !d.errors.is_empty() {
        return Err(ModelError::Invalid(d.errors));
    }
    let mut model = model.expect("decoder reports errors whenever it returns None");
    validate_model(&model).map_err(ModelError::Invalid)?;
    model.canonicalize();
    Ok(model)
}

/// Canonical document text.
pub fn serialize_app_model(model: &AppModel) -> String {
    let wire = WireModel {
        app_id: &model.app_id,
        version: &model.version,
        callbacks: model.callbacks.iter().map(WireCallback::new).collect(),
    };
    pretty(&wire)
}

pub(crate) fn serialize_callback(callback: &Callback) -> String {
    pretty(&WireCallback::new(callback))
}

pub(crate) fn model_to_value(model: &AppModel) -> Value {
    let wire = WireModel {
        app_id: &model.app_id,
        version: &model.version,
        callbacks: model.callbacks.iter().map(WireCallback::new).collect(),
    };
    serde_json::to_value(wire).expect("app model always serializes")
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("app model always serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct WireModel<'a> {
    app_id: &'a str,
    version: &'a str,
    callbacks: Vec<WireCallback<'a>>,
}

#[derive(Serialize)]
struct WireCallback<'a> {
    name: &'a str,
    params: &'a [String],
    entry: &'a str,
    nodes: Vec<WireNode<'a>>,
}

impl<'a> WireCallback<'a> {
    fn new(cb: &'a Callback) -> Self {
        let mut nodes: Vec<&Node> = cb.nodes.iter().collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        WireCallback {
            name: &cb.name,
            params: &cb.params,
            entry: &cb.entry,
            nodes: nodes.into_iter().map(WireNode::new).collect(),
        }
    }
}

#[derive(Serialize)]
struct WireNode<'a> {
    id: &'a str,
    op: &'a Op,
    #[serde(skip_serializing_if = "Option::is_none")]
    next: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    then: Option<&'a str>,
    #[serde(rename = "else", skip_serializing_if = "Option::is_none")]
    otherwise: Option<&'a str>,
}

impl<'a> WireNode<'a> {
    fn new(n: &'a Node) -> Self {
        let (next, then, otherwise) = match &n.succ {
            Successors::Next(t) => (Some(t.as_str()), None, None),
            Successors::Branch { then, otherwise } => {
                (None, Some(then.as_str()), Some(otherwise.as_str()))
            }
            Successors::None => (None, None, None),
        };
        WireNode {
            id: &n.id,
            op: &n.op,
            next,
            then,
            otherwise,
        }
    }
}

#[derive(Default)]
struct Decoder {
    errors: Vec<Violation>,
}

impl Decoder {
    fn err(&mut self, at: &str, msg: impl Into<String>) {
        self.errors.push(Violation::new(at, msg));
    }

    fn object<'v>(
        &mut self,
        v: &'v Value,
        at: &str,
        required: &[&str],
        optional: &[&str],
    ) -> Option<&'v Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.err(at, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                self.err(at, format!("unknown key `{key}`"));
            }
        }
        let mut ok = true;
        for key in required {
            if !map.contains_key(*key) {
                self.err(at, format!("missing key `{key}`"));
                ok = false;
            }
        }
        ok.then_some(map)
    }

    fn string(&mut self, v: &Value, at: &str) -> Option<String> {
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.err(at, "expected a string");
                None
            }
        }
    }

    fn u64(&mut self, v: &Value, at: &str) -> Option<u64> {
        match v.as_u64() {
            Some(n) => Some(n),
            None => {
                self.err(at, "expected a non-negative integer");
                None
            }
        }
    }

    fn model(&mut self, v: &Value) -> Option<AppModel> {
        let map = self.object(v, "model", &["app_id", "version", "callbacks"], &[])?;
        let app_id = self.string(&map["app_id"], "app_id");
        let version = self.string(&map["version"], "version");
        let callbacks = match map["callbacks"].as_array() {
            Some(items) => {
                let decoded: Vec<Option<Callback>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, c)| self.callback(c, &format!("callbacks[{i}]")))
                    .collect();
                decoded.into_iter().collect::<Option<Vec<_>>>()
            }
            None => {
                self.err("callbacks", "expected an array");
                None
            }
        };
        Some(AppModel {
            app_id: app_id?,
            version: version?,
            callbacks: callbacks?,
        })
    }

    fn callback(&mut self, v: &Value, at: &str) -> Option<Callback> {
        let map = self.object(v, at, &["name", "params", "entry", "nodes"], &[])?;
        let name = self.string(&map["name"], &format!("{at}.name"));
        let at = match &name {
            Some(n) => format!("callback `{n}`"),
            None => at.to_string(),
        };
        let params = match map["params"].as_array() {
            Some(items) => items
                .iter()
                .enumerate()
                .map(|(i, p)| self.string(p, &format!("{at}.params[{i}]")))
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<Option<Vec<_>>>(),
            None => {
                self.err(&format!("{at}.params"), "expected an array");
                None
            }
        };
        let entry = self.string(&map["entry"], &format!("{at}.entry"));
        let nodes = match map["nodes"].as_array() {
            Some(items) => items
                .iter()
                .enumerate()
                .map(|(i, n)| self.node(n, &at, i))
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<Option<Vec<_>>>(),
            None => {
                self.err(&format!("{at}.nodes"), "expected an array");
                None
            }
        };
        Some(Callback {
            name: name?,
            params: params?,
            entry: entry?,
            nodes: nodes?,
        })
    }

    fn node(&mut self, v: &Value, cb_at: &str, index: usize) -> Option<Node> {
        let fallback = format!("{cb_at} nodes[{index}]");
        let map = self.object(v, &fallback, &["id", "op"], &["next", "then", "else"])?;
        let id = self.string(&map["id"], &format!("{fallback}.id"))?;
        let at = format!("{cb_at} node `{id}`");
        let op = self.op(&map["op"], &at);
        let edge = |d: &mut Self, key: &str| {
            map.get(key)
                .and_then(|v| d.string(v, &format!("{at}.{key}")))
        };
        let next = edge(self, "next");
        let then = edge(self, "then");
        let otherwise = edge(self, "else");
        let op = op?;
        let succ = match op.kind() {
            OpKind::Exit => {
                if next.is_some() || then.is_some() || otherwise.is_some() {
                    self.err(&at, "exit node must have no successor");
                }
                Successors::None
            }
            OpKind::Branch => {
                if next.is_some() {
                    self.err(&at, "branch node must use `then`/`else`, not `next`");
                }
                match (then, otherwise) {
                    (Some(then), Some(otherwise)) => Successors::Branch { then, otherwise },
                    _ => {
                        self.err(&at, "branch node needs both `then` and `else`");
                        return None;
                    }
                }
            }
            _ => {
                if then.is_some() || otherwise.is_some() {
                    self.err(&at, "only branch nodes may use `then`/`else`");
                }
                match next {
                    Some(next) => Successors::Next(next),
                    None => {
                        self.err(&at, "missing `next`");
                        return None;
                    }
                }
            }
        };
        Some(Node { id, op, succ })
    }

    fn op(&mut self, v: &Value, node_at: &str) -> Option<Op> {
        let at = format!("{node_at}.op");
        let Some(kind) = v.get("kind") else {
            if v.is_object() {
                self.err(&at, "missing key `kind`");
            } else {
                self.err(&at, "expected an object");
            }
            return None;
        };
        let Some(kind_str) = kind.as_str() else {
            self.err(&at, "`kind` must be a string");
            return None;
        };
        let Some(kind) = OpKind::parse(kind_str) else {
            self.err(&at, format!("unknown op kind `{kind_str}`"));
            return None;
        };
        let fields: &[&str] = match kind {
            OpKind::Compute => &["kind", "cost_ms"],
            OpKind::Branch => &["kind", "var", "cmp", "const"],
            OpKind::UiUpdate => &["kind", "widget", "value"],
            OpKind::NetRequest => &["kind", "url", "resp_bytes", "cacheable"],
            OpKind::Prefetch => &["kind", "url"],
            OpKind::Log => &["kind", "tag"],
            OpKind::SendIntent => &["kind", "action"],
            OpKind::Exit => &["kind"],
        };
        let map = self.object(v, &at, fields, &[])?;
        let f = |k: &str| format!("{at}.{k}");
        Some(match kind {
            OpKind::Compute => Op::Compute {
                cost_ms: self.u64(&map["cost_ms"], &f("cost_ms"))?,
            },
            OpKind::Branch => {
                let var = self.string(&map["var"], &f("var"));
                let cmp = match map["cmp"].as_str().and_then(Cmp::parse) {
                    Some(c) => Some(c),
                    None => {
                        self.err(&f("cmp"), "expected one of < <= == != > >=");
                        None
                    }
                };
                let constant = match map["const"].as_i64() {
                    Some(c) => Some(c),
                    None => {
                        self.err(&f("const"), "expected a signed 64-bit integer");
                        None
                    }
                };
                Op::Branch {
                    var: var?,
                    cmp: cmp?,
                    constant: constant?,
                }
            }
            OpKind::UiUpdate => {
                let widget = self.string(&map["widget"], &f("widget"));
                let value = self.value_expr(&map["value"], &f("value"));
                Op::UiUpdate {
                    widget: widget?,
                    value: value?,
                }
            }
            OpKind::NetRequest => {
                let url = self.url_expr(&map["url"], &f("url"));
                let resp_bytes = self.u64(&map["resp_bytes"], &f("resp_bytes"));
                let cacheable = match map["cacheable"].as_bool() {
                    Some(b) => Some(b),
                    None => {
                        self.err(&f("cacheable"), "expected a boolean");
                        None
                    }
                };
                Op::NetRequest {
                    url: url?,
                    resp_bytes: resp_bytes?,
                    cacheable: cacheable?,
                }
            }
            OpKind::Prefetch => Op::Prefetch {
                url: self.string(&map["url"], &f("url"))?,
            },
            OpKind::Log => Op::Log {
                tag: self.string(&map["tag"], &f("tag"))?,
            },
            OpKind::SendIntent => Op::SendIntent {
                action: self.string(&map["action"], &f("action"))?,
            },
            OpKind::Exit => Op::Exit,
        })
    }

    fn single_key<'v>(&mut self, v: &'v Value, at: &str, keys: &[&str]) -> Option<(&'v str, &'v Value)> {
        let map = match v.as_object() {
            Some(m) if m.len() == 1 => m,
            _ => {
                self.err(at, format!("expected an object with exactly one of {keys:?}"));
                return None;
            }
        };
        let (k, inner) = map.iter().next().expect("len checked");
        if !keys.contains(&k.as_str()) {
            self.err(at, format!("unknown key `{k}`"));
            return None;
        }
        Some((k.as_str(), inner))
    }

    fn value_expr(&mut self, v: &Value, at: &str) -> Option<ValueExpr> {
        let (k, inner) = self.single_key(v, at, &["lit", "var", "resp"])?;
        let s = self.string(inner, &format!("{at}.{k}"))?;
        Some(match k {
            "lit" => ValueExpr::Lit(s),
            "var" => ValueExpr::Var(s),
            _ => ValueExpr::Resp(s),
        })
    }

    fn url_expr(&mut self, v: &Value, at: &str) -> Option<UrlExpr> {
        let Some(items) = v.as_array() else {
            self.err(at, "expected an array of url parts");
            return None;
        };
        let parts = items
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let pat = format!("{at}[{i}]");
                let (k, inner) = self.single_key(p, &pat, &["lit", "var"])?;
                let s = self.string(inner, &format!("{pat}.{k}"))?;
                Some(if k == "lit" { UrlPart::Lit(s) } else { UrlPart::Var(s) })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Option<Vec<_>>>()?;
        Some(UrlExpr { parts })
    }
}
