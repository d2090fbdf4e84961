//! The test-scripting language (`.dscr`).
//!
//! ```text
//! script    ::= statement* ;
//! statement ::= "environment" "{" (IDENT "=" (NUMBER|STRING) ";")* "}"
//!             | "monitor" IDENT ("," IDENT)*
//!             | "benchmark" IDENT "=" source
//!             | "technique" IDENT "=" source
//!             | "apply" IDENT "to" IDENT "as" IDENT
//!             | "unittest" source "on" IDENT
//!             | "difftest" IDENT "{" "original" "=" IDENT ";"
//!                 "instrumented" "=" IDENT ";" ("bound" "=" NUMBER ";")?
//!                 ("max_paths" "=" NUMBER ";")? ("perf_tolerance" "=" NUMBER ";")? "}" ;
//! source    ::= STRING | "pool:" IDENT ;
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

mod lexer;
mod run;
mod syntax;

use std::collections::BTreeMap;
use std::fmt;

use crate::exec::{DeviceProfile, METRICS};
use crate::rational::Ratio;
use crate::testgen::GenConfig;

pub use run::{run_id, run_script, write_run, ScriptBody, WallClock, FileResolver, Resolver, ScriptError, ScriptReport, ScriptRun, StatementResult};
pub use syntax::{format_script, parse_script};

/// Environment keys: the device profile fields plus generation and
/// comparison settings.
pub const ENV_KEYS: [&str; 10] = [
    "net_latency_ms",
    "net_bandwidth_kbps",
    "battery_pct",
    "battery_drain_pct_per_s",
    "cpu_factor",
    "cache_hit_ms",
    "prefetch_battery_min",
    "loop_bound",
    "max_paths",
    "perf_tolerance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct DslError {
    pub span: Span,
    pub message: String,
}

impl DslError {
    fn at(span: Span, message: String) -> Self {
        DslError { span, message }
    }

    fn syntax(span: Span, message: &str) -> Self {
        DslError {
            span,
            message: format!("syntax error: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(String),
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvValue {
    Number(String),
    Str(String),
}

impl EnvValue {
    pub fn text(&self) -> &str {
        match self {
            EnvValue::Number(s) | EnvValue::Str(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Environment(BTreeMap<String, EnvValue>),
    Monitor(Vec<String>),
    Benchmark {
        alias: String,
        source: Source,
    },
    Technique {
        alias: String,
        source: Source,
    },
    Apply {
        technique: String,
        benchmark: String,
        alias: String,
    },
    UnitTest {
        source: Source,
        technique: String,
    },
    DiffTest {
        name: String,
        original: String,
        instrumented: String,
        bound: Option<u32>,
        max_paths: Option<usize>,
        perf_tolerance: Option<Ratio>,
    },
}

impl StmtKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StmtKind::Environment(_) => "environment",
            StmtKind::Monitor(_) => "monitor",
            StmtKind::Benchmark { .. } => "benchmark",
            StmtKind::Technique { .. } => "technique",
            StmtKind::Apply { .. } => "apply",
            StmtKind::UnitTest { .. } => "unittest",
            StmtKind::DiffTest { .. } => "difftest",
        }
    }
}

/// A statement and where it starts. Equality ignores the position.
#[derive(Debug, Clone, Eq)]
pub struct Statement {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub statements: Vec<Statement>,
}

impl Script {
    /// The environment after every declaration has been applied in order.
    pub fn final_env(&self) -> RunEnv {
        let mut env = RunEnv::default();
        for st in &self.statements {
            env.apply(&st.kind);
        }
        env
    }
}

/// Environment state while a script runs.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RunEnv {
    pub profile: DeviceProfile,
    pub loop_bound: u32,
    pub max_paths: usize,
    pub perf_tolerance: Ratio,
    /// Declared metrics; none declared means all.
    pub monitor: Option<Vec<String>>,
}

impl Default for RunEnv {
    fn default() -> Self {
        let gen = GenConfig::default();
        RunEnv {
            profile: DeviceProfile::default(),
            loop_bound: gen.loop_bound,
            max_paths: gen.max_paths,
            perf_tolerance: Ratio::ZERO,
            monitor: None,
        }
    }
}

impl RunEnv {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "loop_bound" => {
                self.loop_bound = value
                    .parse()
                    .map_err(|_| "loop_bound must be a non-negative integer".to_string())?
            }
            "max_paths" => match value.parse::<usize>() {
                Ok(n) if n > 0 => self.max_paths = n,
                _ => return Err("max_paths must be a positive integer".into()),
            },
            "perf_tolerance" => {
                self.perf_tolerance = value.parse().map_err(|e: crate::rational::RatioParseError| e.to_string())?
            }
            _ => self.profile.set(key, value).map_err(|e| e.to_string())?,
        }
        Ok(())
    }

    /// Applies an environment or monitor declaration; other statements are ignored.
    /// Values were checked by the parser.
    pub fn apply(&mut self, kind: &StmtKind) {
        match kind {
            StmtKind::Environment(entries) => {
                for (k, v) in entries {
                    self.set(k, v.text()).expect("checked when parsed");
                }
            }
            StmtKind::Monitor(metrics) => {
                let list = self.monitor.get_or_insert_with(Vec::new);
                for m in metrics {
                    if !list.contains(m) {
                        list.push(m.clone());
                    }
                }
                list.sort_by_key(|m| METRICS.iter().position(|x| x == m));
            }
            _ => {}
        }
    }
}
