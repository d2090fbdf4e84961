//! Pair comparison of original and instrumented traces, report assembly,
//! and the end-to-end [`difftest`] driver.

mod report;
mod verdict;

pub use report::{
    aggregate_report, body_digest, difftest, monitored_metrics, CallbackAggregate, DiffEnvironment,
    DiffReport, DiffReportBody, DifftestError, DifftestOptions, DifftestRun, TracePair,
};
pub use verdict::{compare_traces, instrumented_only_verdict, Functional, PairVerdict, Shown};
