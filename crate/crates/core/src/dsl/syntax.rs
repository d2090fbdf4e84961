use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Tok};
use super::{DslError, EnvValue, Script, Source, Span, Statement, StmtKind, ENV_KEYS};
use crate::exec::METRICS;
use crate::rational::Ratio;

#[derive(Clone, Copy, PartialEq, Eq)]
enum AliasKind {
    Model,
    Technique,
}

impl AliasKind {
    fn noun(self) -> &'static str {
        match self {
            AliasKind::Model => "model",
            AliasKind::Technique => "technique",
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: Span,
    aliases: BTreeMap<String, AliasKind>,
    difftests: BTreeSet<String>,
}

/// Parses and checks a script: aliases declared before use and of the
/// right kind, known metrics, known environment keys with valid values.
pub fn parse_script(text: &str) -> Result<Script, DslError> {
    let toks = lex(text)?;
    let lines = text.split('\n').count();
    let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    let mut p = Parser {
        toks,
        pos: 0,
        end: Span { line: lines, col: last_col },
        aliases: BTreeMap::new(),
        difftests: BTreeSet::new(),
    };
    let mut statements = Vec::new();
    while p.pos < p.toks.len() {
        statements.push(p.statement()?);
    }
    Ok(Script { statements })
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, Span)> {
        self.toks.get(self.pos)
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        match self.peek() {
            Some((t, s)) => DslError::syntax(*s, &format!("expected {wanted}, found {}", t.describe())),
            None => DslError::syntax(self.end, &format!("expected {wanted}, found end of input")),
        }
    }

    fn next_tok(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        match self.peek() {
            Some((t, _)) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&tok.describe())),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), DslError> {
        match self.peek() {
            Some((Tok::Ident(w), _)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn ident(&mut self) -> Result<(String, Span), DslError> {
        match self.peek() {
            Some((Tok::Ident(w), s)) => {
                let r = (w.clone(), *s);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn number(&mut self) -> Result<(String, Span), DslError> {
        match self.peek() {
            Some((Tok::Number(n), s)) => {
                let r = (n.clone(), *s);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn source(&mut self) -> Result<Source, DslError> {
        match self.next_tok() {
            Some((Tok::Str(s), _)) => Ok(Source::File(s)),
            Some((Tok::Pool(id), _)) => Ok(Source::Pool(id)),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("a quoted path or `pool:<id>`"))
            }
        }
    }

    fn declare(&mut self, name: &str, span: Span, kind: AliasKind) -> Result<(), DslError> {
        if self.aliases.insert(name.to_string(), kind).is_some() {
            return Err(DslError::at(span, format!("alias `{name}` is already declared")));
        }
        Ok(())
    }

    fn use_alias(&self, name: &str, span: Span, kind: AliasKind) -> Result<(), DslError> {
        match self.aliases.get(name) {
            None => Err(DslError::at(span, format!("undeclared alias `{name}`"))),
            Some(k) if *k != kind => Err(DslError::at(
                span,
                format!("alias `{name}` is a {}, expected a {}", k.noun(), kind.noun()),
            )),
            Some(_) => Ok(()),
        }
    }

    fn statement(&mut self) -> Result<Statement, DslError> {
        let (word, span) = self.ident()?;
        let kind = match word.as_str() {
            "environment" => self.environment()?,
            "monitor" => {
                let mut metrics = Vec::new();
                loop {
                    let (m, s) = self.ident()?;
                    if !METRICS.contains(&m.as_str()) {
                        return Err(DslError::at(s, format!("unknown metric `{m}`")));
                    }
                    metrics.push(m);
                    if self.peek().map(|t| &t.0) != Some(&Tok::Comma) {
                        break;
                    }
                    self.pos += 1;
                }
                StmtKind::Monitor(metrics)
            }
            "benchmark" | "technique" => {
                let (alias, s) = self.ident()?;
                self.expect(Tok::Eq)?;
                let source = self.source()?;
                if word == "benchmark" {
                    self.declare(&alias, s, AliasKind::Model)?;
                    StmtKind::Benchmark { alias, source }
                } else {
                    self.declare(&alias, s, AliasKind::Technique)?;
                    StmtKind::Technique { alias, source }
                }
            }
            "apply" => {
                let (technique, ts) = self.ident()?;
                self.use_alias(&technique, ts, AliasKind::Technique)?;
                self.keyword("to")?;
                let (benchmark, bs) = self.ident()?;
                self.use_alias(&benchmark, bs, AliasKind::Model)?;
                self.keyword("as")?;
                let (alias, s) = self.ident()?;
                self.declare(&alias, s, AliasKind::Model)?;
                StmtKind::Apply {
                    technique,
                    benchmark,
                    alias,
                }
            }
            "unittest" => {
                let source = self.source()?;
                self.keyword("on")?;
                let (technique, ts) = self.ident()?;
                self.use_alias(&technique, ts, AliasKind::Technique)?;
                StmtKind::UnitTest { source, technique }
            }
            "difftest" => self.difftest()?,
            other => return Err(DslError::syntax(span, &format!("unknown statement `{other}`"))),
        };
        Ok(Statement { kind, span })
    }

    fn environment(&mut self) -> Result<StmtKind, DslError> {
        self.expect(Tok::LBrace)?;
        let mut entries = BTreeMap::new();
        let mut scratch = super::RunEnv::default();
        loop {
            if self.peek().map(|t| &t.0) == Some(&Tok::RBrace) {
                self.pos += 1;
                break;
            }
            let (key, ks) = self.ident()?;
            if !ENV_KEYS.contains(&key.as_str()) {
                return Err(DslError::at(ks, format!("unknown environment key `{key}`")));
            }
            self.expect(Tok::Eq)?;
            let value = match self.next_tok() {
                Some((Tok::Number(n), _)) => EnvValue::Number(n),
                Some((Tok::Str(s), _)) => EnvValue::Str(s),
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("a number or string"));
                }
            };
            scratch
                .set(&key, value.text())
                .map_err(|e| DslError::at(ks, e))?;
            self.expect(Tok::Semi)?;
            if entries.insert(key.clone(), value).is_some() {
                return Err(DslError::at(ks, format!("environment key `{key}` given twice")));
            }
        }
        Ok(StmtKind::Environment(entries))
    }

    fn difftest(&mut self) -> Result<StmtKind, DslError> {
        let (name, ns) = self.ident()?;
        if !self.difftests.insert(name.clone()) {
            return Err(DslError::at(ns, format!("difftest `{name}` is already declared")));
        }
        self.expect(Tok::LBrace)?;
        let side = |p: &mut Parser, key: &str| -> Result<String, DslError> {
            p.keyword(key)?;
            p.expect(Tok::Eq)?;
            let (a, s) = p.ident()?;
            p.use_alias(&a, s, AliasKind::Model)?;
            p.expect(Tok::Semi)?;
            Ok(a)
        };
        let original = side(self, "original")?;
        let instrumented = side(self, "instrumented")?;
        let mut bound = None;
        let mut max_paths = None;
        let mut perf_tolerance = None;
        let mut order = ["bound", "max_paths", "perf_tolerance"].into_iter();
        loop {
            let key = match self.peek() {
                Some((Tok::RBrace, _)) => {
                    self.pos += 1;
                    break;
                }
                Some((Tok::Ident(k), _)) => k.clone(),
                _ => return Err(self.unexpected("`bound`, `max_paths`, `perf_tolerance` or `}`")),
            };
            // Optional settings appear at most once, in grammar order.
            if !order.any(|k| k == key) {
                return Err(self.unexpected("`}`"));
            }
            self.pos += 1;
            self.expect(Tok::Eq)?;
            let (n, s) = self.number()?;
            match key.as_str() {
                "bound" => {
                    bound = Some(n.parse::<u32>().map_err(|_| DslError::at(s, "bound must be a non-negative integer".into()))?)
                }
                "max_paths" => match n.parse::<usize>() {
                    Ok(v) if v > 0 => max_paths = Some(v),
                    _ => return Err(DslError::at(s, "max_paths must be a positive integer".into())),
                },
                _ => perf_tolerance = Some(n.parse::<Ratio>().map_err(|e| DslError::at(s, e.to_string()))?),
            }
            self.expect(Tok::Semi)?;
        }
        Ok(StmtKind::DiffTest {
            name,
            original,
            instrumented,
            bound,
            max_paths,
            perf_tolerance,
        })
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn source(s: &Source) -> String {
    match s {
        Source::File(p) => quote(p),
        Source::Pool(id) => format!("pool:{id}"),
    }
}

/// Canonical text: one statement per line, single spaces, sorted
/// environment keys.
pub fn format_script(script: &Script) -> String {
    let mut out = String::new();
    for st in &script.statements {
        let line = match &st.kind {
            StmtKind::Environment(env) => {
                let mut s = String::from("environment {");
                for (k, v) in env {
                    let v = match v {
                        EnvValue::Number(n) => n.clone(),
                        EnvValue::Str(t) => quote(t),
                    };
                    s.push_str(&format!(" {k} = {v};"));
                }
                s.push_str(" }");
                s
            }
            StmtKind::Monitor(m) => format!("monitor {}", m.join(", ")),
            StmtKind::Benchmark { alias, source: src } => format!("benchmark {alias} = {}", source(src)),
            StmtKind::Technique { alias, source: src } => format!("technique {alias} = {}", source(src)),
            StmtKind::Apply {
                technique,
                benchmark,
                alias,
            } => format!("apply {technique} to {benchmark} as {alias}"),
            StmtKind::UnitTest { source: src, technique } => format!("unittest {} on {technique}", source(src)),
            StmtKind::DiffTest {
                name,
                original,
                instrumented,
                bound,
                max_paths,
                perf_tolerance,
            } => {
                let mut s = format!("difftest {name} {{ original = {original}; instrumented = {instrumented};");
                if let Some(b) = bound {
                    s.push_str(&format!(" bound = {b};"));
                }
                if let Some(m) = max_paths {
                    s.push_str(&format!(" max_paths = {m};"));
                }
                if let Some(t) = perf_tolerance {
                    s.push_str(&format!(" perf_tolerance = {t};"));
                }
                s.push_str(" }");
                s
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
