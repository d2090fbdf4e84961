use std::collections::BTreeMap;

use serde::Serialize;

use crate::exec::{RunTrace, Termination, UiCheckpoint, METRICS};
use crate::rational::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shown {
    pub widget: String,
    pub value: String,
}

impl From<&UiCheckpoint> for Shown {
    fn from(c: &UiCheckpoint) -> Self {
        Shown {
            widget: c.widget.clone(),
            value: c.value.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Functional {
    Pass,
    /// First divergence. A side is absent when its checkpoint sequence ended
    /// earlier; both are absent when only a termination differs.
    Fail {
        index: usize,
        original: Option<Shown>,
        instrumented: Option<Shown>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub test_id: String,
    pub callback: String,
    pub functional: Functional,
    pub perf_ok: bool,
    pub orig_time_ms: Option<u64>,
    pub instr_time_ms: u64,
    pub delta_ms: Option<i64>,
    /// `instr / orig`; 1 when both are 0, absent when only the original is 0.
    pub ratio: Option<f64>,
    pub nfp_deltas: BTreeMap<String, i64>,
    pub errors: Vec<String>,
}

impl PairVerdict {
    pub fn compared(&self) -> bool {
        !matches!(self.functional, Functional::Skipped { .. })
    }

    pub fn passed(&self) -> bool {
        self.functional == Functional::Pass
    }
}

fn termination_error(side: &str, t: &RunTrace) -> Option<String> {
    match t.termination {
        Termination::Normal => None,
        Termination::Error(kind) => Some(format!(
            "{side}: {}",
            serde_json::to_value(kind).expect("fault serializes").as_str().unwrap_or("error")
        )),
    }
}

/// Compares a pair of traces of one test case. Performance is judged on
/// exact integers: `instr ≤ orig × (1 + tolerance)`.
pub fn compare_traces(
    test_id: &str,
    orig: &RunTrace,
    instr: &RunTrace,
    perf_tolerance: Ratio,
) -> PairVerdict {
    let (a, b) = (&orig.ui_checkpoints, &instr.ui_checkpoints);
    let same = |x: &UiCheckpoint, y: &UiCheckpoint| x.widget == y.widget && x.value == y.value;
    let mismatch = (0..a.len().max(b.len())).find(|&i| match (a.get(i), b.get(i)) {
        (Some(x), Some(y)) => !same(x, y),
        _ => true,
    });
    let errors: Vec<String> = [termination_error("original", orig), termination_error("instrumented", instr)]
        .into_iter()
        .flatten()
        .collect();
    let functional = match mismatch {
        Some(index) => Functional::Fail {
            index,
            original: a.get(index).map(Shown::from),
            instrumented: b.get(index).map(Shown::from),
        },
        None if !errors.is_empty() => Functional::Fail {
            index: a.len(),
            original: None,
            instrumented: None,
        },
        None => Functional::Pass,
    };
    let (o, i) = (orig.sim_time_ms(), instr.sim_time_ms());
    let bound = (Ratio::ONE.inner() + perf_tolerance.inner()) * num_rational::Rational64::from_integer(o as i64);
    let perf_ok = num_rational::Rational64::from_integer(i as i64) <= bound;
    let ratio = match (o, i) {
        (0, 0) => Some(1.0),
        (0, _) => None,
        _ => Some(i as f64 / o as f64),
    };
    let nfp_deltas = METRICS
        .iter()
        .map(|m| (m.to_string(), instr.metric(m) as i64 - orig.metric(m) as i64))
        .collect();
    PairVerdict {
        test_id: test_id.to_string(),
        callback: orig.callback.clone(),
        functional,
        perf_ok,
        orig_time_ms: Some(o),
        instr_time_ms: i,
        delta_ms: Some(i as i64 - o as i64),
        ratio,
        nfp_deltas,
        errors,
    }
}

/// Verdict for a test of a callback that only the instrumented app has.
pub fn instrumented_only_verdict(test_id: &str, instr: &RunTrace) -> PairVerdict {
    PairVerdict {
        test_id: test_id.to_string(),
        callback: instr.callback.clone(),
        functional: Functional::Skipped {
            reason: "added callback".into(),
        },
        perf_ok: true,
        orig_time_ms: None,
        instr_time_ms: instr.sim_time_ms(),
        delta_ms: None,
        ratio: None,
        nfp_deltas: BTreeMap::new(),
        errors: termination_error("instrumented", instr).into_iter().collect(),
    }
}
