//! Shared helpers: fixture access, a reference FNV-1a, and a seeded
//! generator of valid random app models.

#![allow(dead_code)]

use std::path::PathBuf;

use decree::model::{app_model_from_value, AppModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

pub fn shopping() -> AppModel {
    decree::model::parse_app_model(&fixture("shopping.app.json")).unwrap()
}

/// Textbook FNV-1a 64, written independently of the crate's version.
pub fn reference_fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Clone, Copy)]
pub struct GenShape {
    pub max_callbacks: usize,
    pub max_branches: usize,
    pub max_params: usize,
    /// Branch constants are drawn from this range.
    pub consts: (i64, i64),
    /// Probability that a branch becomes a loop head.
    pub loop_chance: f64,
}

impl Default for GenShape {
    fn default() -> Self {
        GenShape {
            max_callbacks: 5,
            max_branches: 4,
            max_params: 3,
            consts: (-5, 25),
            loop_chance: 0.15,
        }
    }
}

enum Item {
    Op(Value),
    If(Value, Vec<Item>, Vec<Item>),
    Loop(Value, Vec<Item>),
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    shape: GenShape,
    params: Vec<String>,
    branches_left: usize,
    next_id: usize,
    nodes: Vec<Value>,
}

const CMPS: [&str; 6] = ["<", "<=", "==", "!=", ">", ">="];
const URLS: [&str; 3] = ["https://api/a", "https://api/b", "https://cdn/c"];
const ACTIONS: [&str; 3] = ["com.app.SHARE", "com.evil.STEAL", "com.app.VIEW"];

impl Gen<'_> {
    fn var(&mut self) -> String {
        self.params.choose(self.rng).unwrap().clone()
    }

    fn op(&mut self) -> Value {
        match self.rng.gen_range(0..5) {
            0 => json!({"kind": "compute", "cost_ms": self.rng.gen_range(0..20)}),
            1 => {
                let value = if self.rng.gen_bool(0.5) {
                    json!({"var": self.var()})
                } else {
                    json!({"lit": format!("v{}", self.rng.gen_range(0..4))})
                };
                json!({"kind": "ui_update", "widget": format!("w{}", self.rng.gen_range(0..3)), "value": value})
            }
            2 => {
                let base = *URLS.choose(self.rng).unwrap();
                let url = if self.rng.gen_bool(0.3) {
                    json!([{"lit": format!("{base}/")}, {"var": self.var()}])
                } else {
                    json!([{"lit": base}])
                };
                json!({"kind": "net_request", "url": url, "resp_bytes": self.rng.gen_range(0..4096), "cacheable": self.rng.gen_bool(0.6)})
            }
            3 => json!({"kind": "log", "tag": "t"}),
            _ => json!({"kind": "send_intent", "action": *ACTIONS.choose(self.rng).unwrap()}),
        }
    }

    fn atom(&mut self) -> Value {
        json!({"kind": "branch", "var": self.var(), "cmp": *CMPS.choose(self.rng).unwrap(),
               "const": self.rng.gen_range(self.shape.consts.0..=self.shape.consts.1)})
    }

    fn seq(&mut self, depth: usize) -> Vec<Item> {
        let len = self.rng.gen_range(1..=3);
        let mut items = Vec::new();
        for _ in 0..len {
            if self.branches_left > 0 && depth < 3 && self.rng.gen_bool(0.5) {
                self.branches_left -= 1;
                let atom = self.atom();
                if self.rng.gen_bool(self.shape.loop_chance) {
                    // Straight-line bodies keep bounded unrolling under the path cap.
                    let body = (0..self.rng.gen_range(1..=2)).map(|_| Item::Op(self.op())).collect();
                    items.push(Item::Loop(atom, body));
                } else {
                    let then = self.seq(depth + 1);
                    let otherwise = self.seq(depth + 1);
                    items.push(Item::If(atom, then, otherwise));
                }
            } else {
                let op = self.op();
                items.push(Item::Op(op));
            }
        }
        items
    }

    fn fresh(&mut self) -> String {
        let id = format!("n{:02}", self.next_id);
        self.next_id += 1;
        id
    }

    /// Emits nodes for `items` that continue to `cont`; returns the entry id.
    fn emit(&mut self, items: Vec<Item>, cont: String) -> String {
        let mut cont = cont;
        for item in items.into_iter().rev() {
            let id = self.fresh();
            match item {
                Item::Op(op) => self.nodes.push(json!({"id": id, "op": op, "next": cont})),
                Item::If(atom, then, otherwise) => {
                    let t = self.emit(then, cont.clone());
                    let e = self.emit(otherwise, cont.clone());
                    self.nodes.push(json!({"id": id, "op": atom, "then": t, "else": e}));
                }
                Item::Loop(atom, body) => {
                    let b = self.emit(body, id.clone());
                    self.nodes.push(json!({"id": id, "op": atom, "then": b, "else": cont}));
                }
            }
            cont = id;
        }
        cont
    }
}

/// One random callback as JSON.
pub fn random_callback(rng: &mut ChaCha8Rng, name: &str, shape: GenShape) -> Value {
    let n_params = rng.gen_range(1..=shape.max_params);
    let params: Vec<String> = ["x", "y", "z"][..n_params].iter().map(|s| s.to_string()).collect();
    let mut g = Gen {
        rng,
        shape,
        params: params.clone(),
        branches_left: shape.max_branches,
        next_id: 0,
        nodes: Vec::new(),
    };
    let exit = g.fresh();
    g.nodes.push(json!({"id": exit, "op": {"kind": "exit"}}));
    let items = g.seq(0);
    let entry = g.emit(items, exit);
    json!({"name": name, "params": params, "entry": entry, "nodes": g.nodes})
}

pub fn random_model(rng: &mut ChaCha8Rng, shape: GenShape) -> AppModel {
    let n = rng.gen_range(1..=shape.max_callbacks);
    let callbacks: Vec<Value> = (0..n)
        .map(|i| random_callback(rng, &format!("onEvent#{i}"), shape))
        .collect();
    let doc = json!({"app_id": format!("gen.{}", rng.gen_range(0..1000)), "version": "1", "callbacks": callbacks});
    app_model_from_value(&doc).unwrap_or_else(|e| panic!("generator produced an invalid model: {e}\n{doc:#}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn source(rng: &mut ChaCha8Rng, ext: &str) -> String {
    if rng.gen_bool(0.3) {
        format!("pool:{:016x}", rng.gen::<u64>())
    } else {
        format!("\"dir{}/f{}.{ext}\"", rng.gen_range(0..3), rng.gen_range(0..9))
    }
}

/// A random script that parses; aliases are always declared before use.
pub fn random_script(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    if rng.gen_bool(0.3) {
        out.push_str("# generated\n");
    }
    let mut models: Vec<String> = Vec::new();
    let mut techniques: Vec<String> = Vec::new();
    let mut difftests = 0;
    for _ in 0..rng.gen_range(1..12) {
        match rng.gen_range(0..7) {
            0 => {
                let mut entries = Vec::new();
                for key in decree::dsl::ENV_KEYS {
                    if rng.gen_bool(0.3) {
                        let v = match key {
                            "cpu_factor" | "battery_drain_pct_per_s" | "perf_tolerance" => match rng.gen_range(0..3) {
                                0 => format!("\"{}/{}\"", rng.gen_range(1..9), rng.gen_range(1..9)),
                                1 => format!("{}.{:02}", rng.gen_range(1..3), rng.gen_range(0..100)),
                                _ => rng.gen_range(1..4).to_string(),
                            },
                            "battery_pct" | "prefetch_battery_min" => rng.gen_range(0..=100).to_string(),
                            "max_paths" => rng.gen_range(1..500).to_string(),
                            _ => rng.gen_range(0..5000).to_string(),
                        };
                        entries.push(format!("{key} = {v};"));
                    }
                }
                out.push_str(&format!("environment {{ {} }}\n", entries.join("\n  ")));
            }
            1 => {
                let mut ms: Vec<&str> = decree::exec::METRICS.to_vec();
                ms.shuffle(rng);
                ms.truncate(rng.gen_range(1..=4));
                out.push_str(&format!("monitor {}\n", ms.join(" , ")));
            }
            2 => {
                let alias = format!("b{}", models.len());
                out.push_str(&format!("benchmark {alias} = {}\n", source(rng, "app.json")));
                models.push(alias);
            }
            3 => {
                let alias = format!("t{}", techniques.len());
                out.push_str(&format!("technique {alias}={}\n", source(rng, "manifest.json")));
                techniques.push(alias);
            }
            4 if !models.is_empty() && !techniques.is_empty() => {
                let t = techniques.choose(rng).unwrap().clone();
                let b = models.choose(rng).unwrap().clone();
                let alias = format!("b{}", models.len());
                out.push_str(&format!("apply {t} to {b} as {alias}\n"));
                models.push(alias);
            }
            5 if !techniques.is_empty() => {
                let t = techniques.choose(rng).unwrap();
                out.push_str(&format!("unittest \"u{}.utest.json\" on {t}\n", rng.gen_range(0..5)));
            }
            6 if !models.is_empty() => {
                let a = models.choose(rng).unwrap();
                let b = models.choose(rng).unwrap();
                let mut s = format!("difftest d{difftests} {{ original = {a}; instrumented = {b};");
                difftests += 1;
                if rng.gen_bool(0.4) {
                    s.push_str(&format!(" bound = {};", rng.gen_range(0..5)));
                }
                if rng.gen_bool(0.4) {
                    s.push_str(&format!(" max_paths = {};", rng.gen_range(1..100)));
                }
                if rng.gen_bool(0.4) {
                    s.push_str(&format!(" perf_tolerance = 0.{};", rng.gen_range(0..99)));
                }
                out.push_str(&s);
                out.push_str(" }\n");
            }
            _ => out.push('\n'),
        }
    }
    out
}
