use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::verdict::{compare_traces, instrumented_only_verdict, PairVerdict};
use crate::diff::{diff_apps, CallbackDiff};
use crate::digest::{fnv1a64, Digest64};
use crate::exec::{execute_callback, DeviceProfile, ExecError, ProfileError, RunTrace, METRICS};
use crate::model::AppModel;
use crate::rational::Ratio;
use crate::techniques::OsPolicy;
use crate::testgen::{generate_tests, GenConfig, TestSource, TestSuite, TestgenError};

/// Everything about the run environment that can change a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffEnvironment {
    pub profile: DeviceProfile,
    /// Runtime settings of the technique's device monitors and backend
    /// services, applied to the instrumented side only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instrumented_runtime: Option<BTreeMap<String, String>>,
    /// OS policy of the instrumented side.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub os_policy: Option<OsPolicy>,
    pub perf_tolerance: Ratio,
    /// Metrics kept in the report; always contains `sim_time_ms`.
    pub monitor: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallbackAggregate {
    pub tests: usize,
    pub compared: usize,
    pub passed: usize,
    pub orig_time_ms: u64,
    pub instr_time_ms: u64,
    pub delta_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReportBody {
    /// Content ids of the two models.
    pub original: Digest64,
    pub instrumented: Digest64,
    pub diff: CallbackDiff,
    pub suite: TestSuite,
    pub verdicts: Vec<PairVerdict>,
    pub passed: usize,
    pub compared: usize,
    /// `passed / compared`; null when nothing was compared.
    pub accuracy: Option<f64>,
    /// Time totals per tested callback.
    pub callbacks: BTreeMap<String, CallbackAggregate>,
    pub environment: DiffEnvironment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    #[serde(flatten)]
    pub body: DiffReportBody,
    /// Digest of the canonical body text; always serialized last.
    pub digest: Digest64,
}

impl DiffReport {
    pub fn accuracy_ratio(&self) -> Option<Ratio> {
        (self.body.compared > 0)
            .then(|| Ratio::new(self.body.passed as i64, self.body.compared as i64))
    }

    /// True when every compared test passed functionally.
    pub fn all_passed(&self) -> bool {
        self.body.passed == self.body.compared
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report always serializes");
        s.push('\n');
        s
    }
}

pub fn body_digest<T: Serialize>(body: &T) -> Digest64 {
    fnv1a64(
        serde_json::to_string_pretty(body)
            .expect("body serializes")
            .as_bytes(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DifftestError {
    #[error(transparent)]
    Testgen(#[from] TestgenError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("instrumented runtime settings: {0}")]
    Profile(#[from] ProfileError),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("verdicts do not match the suite: {0}")]
    Mismatch(String),
}

/// Orders a monitor list like [`METRICS`] and adds `sim_time_ms`. No list
/// means all metrics.
pub fn monitored_metrics(monitor: Option<&[String]>) -> Result<Vec<String>, DifftestError> {
    let Some(list) = monitor else {
        return Ok(METRICS.iter().map(|m| m.to_string()).collect());
    };
    let mut set: BTreeSet<&str> = BTreeSet::from(["sim_time_ms"]);
    for m in list {
        if !METRICS.contains(&m.as_str()) {
            return Err(DifftestError::UnknownMetric(m.clone()));
        }
        set.insert(m);
    }
    Ok(METRICS
        .iter()
        .filter(|m| set.contains(*m))
        .map(|m| m.to_string())
        .collect())
}

/// Builds the report from one verdict per generated test, in suite order.
pub fn aggregate_report(
    original: &AppModel,
    instrumented: &AppModel,
    diff: CallbackDiff,
    suite: TestSuite,
    mut verdicts: Vec<PairVerdict>,
    environment: DiffEnvironment,
) -> Result<DiffReport, DifftestError> {
    if verdicts.len() != suite.generated.len() {
        return Err(DifftestError::Mismatch(format!(
            "{} tests, {} verdicts",
            suite.generated.len(),
            verdicts.len()
        )));
    }
    for (t, v) in suite.generated.iter().zip(&verdicts) {
        if t.id != v.test_id {
            return Err(DifftestError::Mismatch(format!("expected `{}`, got `{}`", t.id, v.test_id)));
        }
    }
    let mut callbacks: BTreeMap<String, CallbackAggregate> = BTreeMap::new();
    for v in &mut verdicts {
        v.nfp_deltas.retain(|k, _| environment.monitor.contains(k));
        let agg = callbacks.entry(v.callback.clone()).or_default();
        agg.tests += 1;
        if v.compared() {
            agg.compared += 1;
            agg.passed += usize::from(v.passed());
            agg.orig_time_ms += v.orig_time_ms.unwrap_or(0);
            agg.instr_time_ms += v.instr_time_ms;
            agg.delta_ms += v.delta_ms.unwrap_or(0);
        }
    }
    let compared = verdicts.iter().filter(|v| v.compared()).count();
    let passed = verdicts.iter().filter(|v| v.passed()).count();
    let body = DiffReportBody {
        original: original.content_id(),
        instrumented: instrumented.content_id(),
        diff,
        suite,
        verdicts,
        passed,
        compared,
        accuracy: (compared > 0).then(|| passed as f64 / compared as f64),
        callbacks,
        environment,
    };
    Ok(DiffReport {
        digest: body_digest(&body),
        body,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifftestOptions {
    pub profile: DeviceProfile,
    pub gen: GenConfig,
    pub perf_tolerance: Ratio,
    pub monitor: Option<Vec<String>>,
    pub os_policy: Option<OsPolicy>,
    pub instrumented_runtime: Option<BTreeMap<String, String>>,
}

impl Default for DifftestOptions {
    fn default() -> Self {
        DifftestOptions {
            profile: DeviceProfile::default(),
            gen: GenConfig::default(),
            perf_tolerance: Ratio::ZERO,
            monitor: None,
            os_policy: None,
            instrumented_runtime: None,
        }
    }
}

/// Both traces of one test case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracePair {
    pub test_id: String,
    pub original: Option<RunTrace>,
    pub instrumented: RunTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifftestRun {
    pub report: DiffReport,
    pub traces: Vec<TracePair>,
}

/// Diff, generate tests, run both sides on the same inputs, compare.
pub fn difftest(
    original: &AppModel,
    instrumented: &AppModel,
    options: &DifftestOptions,
) -> Result<DifftestRun, DifftestError> {
    let monitor = monitored_metrics(options.monitor.as_deref())?;
    let instr_profile = options
        .profile
        .with_runtime(options.instrumented_runtime.as_ref())?;
    let no_policy = OsPolicy::default();
    let instr_policy = options.os_policy.as_ref().unwrap_or(&no_policy);
    let no_cache = BTreeSet::new();

    let diff = diff_apps(original, instrumented);
    let suite = generate_tests(original, instrumented, &diff, &options.gen)?;
    let mut verdicts = Vec::with_capacity(suite.generated.len());
    let mut traces = Vec::with_capacity(suite.generated.len());
    for test in &suite.generated {
        let instr = execute_callback(
            instrumented,
            &test.callback,
            &test.inputs,
            &instr_profile,
            instr_policy,
            &no_cache,
        )?;
        let orig = match test.source {
            TestSource::Original => Some(execute_callback(
                original,
                &test.callback,
                &test.inputs,
                &options.profile,
                &no_policy,
                &no_cache,
            )?),
            TestSource::InstrumentedOnly => None,
        };
        verdicts.push(match &orig {
            Some(o) => compare_traces(&test.id, o, &instr, options.perf_tolerance),
            None => instrumented_only_verdict(&test.id, &instr),
        });
        traces.push(TracePair {
            test_id: test.id.clone(),
            original: orig,
            instrumented: instr,
        });
    }
    let environment = DiffEnvironment {
        profile: options.profile.clone(),
        instrumented_runtime: options.instrumented_runtime.clone(),
        os_policy: options.os_policy.clone(),
        perf_tolerance: options.perf_tolerance,
        monitor,
    };
    let report = aggregate_report(original, instrumented, diff, suite, verdicts, environment)?;
    Ok(DifftestRun { report, traces })
}
