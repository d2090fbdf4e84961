//! Deterministic simulator for one callback at a time, plus unit-test
//! evaluation of techniques.
//!
//! Cost model, in simulated milliseconds: `compute` costs
//! `ceil(cost_ms × cpu_factor)`; `ui_update`, `log` and `send_intent` cost 1;
//! `branch` and `prefetch` cost 0; a `net_request` costs `cache_hit_ms` when
//! its URL is cached and otherwise `net_latency_ms + ceil(bytes × 8 / kbps)`.
//! A prefetch only happens while the battery is at least
//! `prefetch_battery_min`; it warms the cache at once and its bytes count
//! towards `net_bytes`.

mod interp;
mod profile;
mod trace;
mod unit;

pub use interp::{execute_callback, response_catalogue, response_content, ExecError, STEP_BUDGET};
pub use profile::{DeviceProfile, ProfileError};
pub use trace::{
    ExecFault, IntentEvent, IntentStatus, NetEvent, NetOutcome, RunTrace, Termination,
    UiCheckpoint, METRICS,
};
pub use unit::{
    accuracy, parse_unit_test, run_unit_test, EmptyResults, ExpectKind, Expectation, Outcome,
    UnitNfp, UnitResult, UnitTestDoc, UnitTestError,
};

#[cfg(test)]
mod tests;
