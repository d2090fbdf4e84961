use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::json;

use super::*;
use crate::arch::load_manifest;
use crate::model::{app_model_from_value, parse_app_model, AppModel};
use crate::rational::Ratio;
use crate::techniques::{logger_instrumenter, prefetch_instrumenter, OsPolicy, PrefetchPoint};

fn shopping() -> AppModel {
    parse_app_model(include_str!("../../fixtures/shopping.app.json")).unwrap()
}

fn prefetched() -> AppModel {
    prefetch_instrumenter(
        &shopping(),
        &[PrefetchPoint {
            callback: "onClick#buy".into(),
            url: "https://api/a".into(),
        }],
    )
    .unwrap()
}

fn x(v: i64) -> BTreeMap<String, i64> {
    BTreeMap::from([("x".to_string(), v)])
}

fn run(m: &AppModel, inputs: &BTreeMap<String, i64>, profile: &DeviceProfile) -> RunTrace {
    execute_callback(m, &m.callbacks[0].name, inputs, profile, &OsPolicy::default(), &BTreeSet::new())
        .unwrap()
}

fn single(params: &[&str], nodes: serde_json::Value) -> AppModel {
    let entry = nodes[0]["id"].as_str().unwrap().to_string();
    app_model_from_value(&json!({
        "app_id": "t", "version": "1",
        "callbacks": [{"name": "cb", "params": params, "entry": entry, "nodes": nodes}]
    }))
    .unwrap()
}

#[test]
fn exit_only() {
    let m = single(&[], json!([{"id": "z", "op": {"kind": "exit"}}]));
    let t = run(&m, &BTreeMap::new(), &DeviceProfile::default());
    assert_eq!(t.sim_time_ms(), 0);
    assert!(t.ui_checkpoints.is_empty());
    assert_eq!(t.termination, Termination::Normal);
}

#[test]
fn shopping_costs() {
    let p = DeviceProfile::default();
    let els = run(&shopping(), &x(10), &p);
    assert_eq!(els.sim_time_ms(), 5 + 1 + 1);
    assert_eq!(els.executed, vec!["n0", "n1", "n3", "n4", "n5"]);
    let then = run(&shopping(), &x(-1000), &p);
    assert_eq!(then.sim_time_ms(), 5 + 100 + 17 + 1);
    assert_eq!(then.metric("net_bytes"), 2048);
    assert_eq!(then.metric("net_requests"), 1);
    assert_eq!(then.path_id.to_hex(), "ccb87bbe13186163");
    assert_eq!(then.ui_checkpoints.len(), 1);
    assert_eq!(then.ui_checkpoints[0].widget, "label1");
    assert_eq!(then.ui_checkpoints[0].value, "-1000");
    assert_eq!(then.ui_checkpoints[0].digest, crate::fnv1a64(b"label1=-1000"));
    assert_eq!(then.exit_clock - then.entry_clock, then.sim_time_ms());

    let pf = run(&prefetched(), &x(-1000), &p);
    assert_eq!(pf.sim_time_ms(), 5 + 1 + 1);
    assert_eq!(pf.metric("cache_hits"), 1);
    assert_eq!(pf.metric("net_bytes"), 2048);
    assert_eq!(pf.ui_checkpoints, then.ui_checkpoints);
}

#[test]
fn warm_cache_argument() {
    let warm = BTreeSet::from(["https://api/a".to_string()]);
    let t = execute_callback(
        &shopping(),
        "onClick#buy",
        &x(0),
        &DeviceProfile::default(),
        &OsPolicy::default(),
        &warm,
    )
    .unwrap();
    assert_eq!(t.sim_time_ms(), 5 + 1 + 1);
    assert_eq!(t.metric("net_bytes"), 0);
}

#[test]
fn low_battery_skips_prefetch() {
    let mut p = DeviceProfile::default();
    p.battery_pct = 10;
    let t = run(&prefetched(), &x(-1000), &p);
    assert_eq!(t.sim_time_ms(), 123);
    assert_eq!(t.metric("cache_hits"), 0);
    assert_eq!(t.net_events[0].outcome, NetOutcome::PrefetchSkipped);
    // Battery exactly at the threshold still prefetches.
    p.battery_pct = 20;
    assert_eq!(run(&prefetched(), &x(-1000), &p).sim_time_ms(), 7);
}

#[test]
fn battery_drains_with_clock() {
    let mut p = DeviceProfile::default();
    p.battery_pct = 21;
    p.battery_drain_pct_per_s = "0.5".parse().unwrap();
    assert_eq!(p.battery_at(0), Ratio::from_integer(21));
    assert_eq!(p.battery_at(2000), Ratio::from_integer(20));
    assert!(p.battery_at(2001) < Ratio::from_integer(20));
    assert_eq!(p.battery_at(1_000_000), Ratio::ZERO);
    // Prefetch placed after a 3000 ms compute sees 19.5%.
    let m = single(
        &[],
        json!([
            {"id": "a", "op": {"kind": "compute", "cost_ms": 3000}, "next": "b"},
            {"id": "b", "op": {"kind": "prefetch", "url": "u"}, "next": "z"},
            {"id": "z", "op": {"kind": "exit"}}
        ]),
    );
    let t = run(&m, &BTreeMap::new(), &p);
    assert_eq!(t.net_events[0].outcome, NetOutcome::PrefetchSkipped);
}

#[test]
fn cpu_factor_rounds_up_exactly() {
    let mut p = DeviceProfile::default();
    p.cpu_factor = "1.1".parse().unwrap();
    // ceil(10 × 1.1) = 11 exactly; ceil(5 × 1.1) = ceil(5.5) = 6.
    let m = single(
        &[],
        json!([
            {"id": "a", "op": {"kind": "compute", "cost_ms": 10}, "next": "b"},
            {"id": "b", "op": {"kind": "compute", "cost_ms": 5}, "next": "z"},
            {"id": "z", "op": {"kind": "exit"}}
        ]),
    );
    assert_eq!(run(&m, &BTreeMap::new(), &p).sim_time_ms(), 17);
}

#[test]
fn responses_intents_and_policy() {
    let m = single(
        &["id"],
        json!([
            {"id": "a", "op": {"kind": "ui_update", "widget": "w", "value": {"resp": "https://r"}}, "next": "z"},
            {"id": "z", "op": {"kind": "exit"}}
        ]),
    );
    let t = run(&m, &x2("id", 1), &DeviceProfile::default());
    assert_eq!(t.termination, Termination::Error(ExecFault::UninitializedResponse));
    assert!(t.ui_checkpoints.is_empty());

    let m = single(
        &["id"],
        json!([
            {"id": "a", "op": {"kind": "net_request", "url": [{"lit": "https://r/"}, {"var": "id"}], "resp_bytes": 1000, "cacheable": false}, "next": "b"},
            {"id": "b", "op": {"kind": "net_request", "url": [{"lit": "https://r/7"}], "resp_bytes": 1000, "cacheable": false}, "next": "c"},
            {"id": "c", "op": {"kind": "ui_update", "widget": "w", "value": {"resp": "https://r/7"}}, "next": "d"},
            {"id": "d", "op": {"kind": "send_intent", "action": "EVIL"}, "next": "e"},
            {"id": "e", "op": {"kind": "send_intent", "action": "OK"}, "next": "z"},
            {"id": "z", "op": {"kind": "exit"}}
        ]),
    );
    let policy = OsPolicy {
        blocked_intent_actions: BTreeSet::from(["EVIL".to_string()]),
    };
    let t = execute_callback(&m, "cb", &x2("id", 7), &DeviceProfile::default(), &policy, &BTreeSet::new())
        .unwrap();
    // Not cacheable: both requests go to the network (100 + 8 each).
    assert_eq!(t.metric("net_requests"), 2);
    assert_eq!(t.metric("cache_hits"), 0);
    assert_eq!(t.net_events[0].url, "https://r/7");
    assert_eq!(t.ui_checkpoints[0].value, crate::fnv1a64(b"https://r/7").to_hex());
    assert_eq!(t.sim_time_ms(), 108 + 108 + 1 + 1 + 1);
    let statuses: Vec<_> = t.intent_events.iter().map(|e| e.status).collect();
    assert_eq!(statuses, vec![IntentStatus::Blocked, IntentStatus::Delivered]);
}

fn x2(k: &str, v: i64) -> BTreeMap<String, i64> {
    BTreeMap::from([(k.to_string(), v)])
}

#[test]
fn infinite_loop_hits_budget() {
    let m = single(
        &["x"],
        json!([
            {"id": "a", "op": {"kind": "branch", "var": "x", "cmp": "<", "const": 5}, "then": "b", "else": "z"},
            {"id": "b", "op": {"kind": "compute", "cost_ms": 1}, "next": "a"},
            {"id": "z", "op": {"kind": "exit"}}
        ]),
    );
    let t = run(&m, &x(0), &DeviceProfile::default());
    assert_eq!(t.termination, Termination::Error(ExecFault::BudgetExhausted));
    assert_eq!(t.executed.len(), STEP_BUDGET);
    assert_eq!(t.sim_time_ms(), (STEP_BUDGET / 2) as u64);
}

#[test]
fn precondition_errors() {
    let m = shopping();
    let p = DeviceProfile::default();
    let none = BTreeSet::new();
    let pol = OsPolicy::default();
    assert!(matches!(
        execute_callback(&m, "nope", &x(0), &p, &pol, &none),
        Err(ExecError::UnknownCallback(_))
    ));
    assert!(matches!(
        execute_callback(&m, "onClick#buy", &BTreeMap::new(), &p, &pol, &none),
        Err(ExecError::MissingInput { .. })
    ));
}

#[test]
fn logger_preserves_checkpoints() {
    let p = DeviceProfile::default();
    let logged = logger_instrumenter(&shopping());
    for v in [-1000, 10] {
        let a = run(&shopping(), &x(v), &p);
        let b = run(&logged, &x(v), &p);
        let pairs = |t: &RunTrace| {
            t.ui_checkpoints
                .iter()
                .map(|c| (c.widget.clone(), c.value.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(&a), pairs(&b));
        assert!(b.sim_time_ms() > a.sim_time_ms());
    }
}

#[test]
fn deterministic_serialization() {
    let p = DeviceProfile::default();
    assert_eq!(run(&prefetched(), &x(-1000), &p).to_json(), run(&prefetched(), &x(-1000), &p).to_json());
}

#[test]
fn profile_keys() {
    let mut p = DeviceProfile::default();
    p.set("battery_pct", "5").unwrap();
    assert_eq!(p.battery_pct, 5);
    assert!(p.set("battery_pct", "101").is_err());
    assert!(p.set("net_bandwidth_kbps", "0").is_err());
    assert!(p.set("cpu_factor", "0").is_err());
    assert!(p.set("battery", "1").is_err());
    let rt = BTreeMap::from([
        ("cache_hit_ms".to_string(), "3".to_string()),
        ("reads".to_string(), "x".to_string()),
    ]);
    assert_eq!(p.with_runtime(Some(&rt)).unwrap().cache_hit_ms, 3);
}

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn utest(kind: &str, op: &str, value: serde_json::Value) -> UnitTestDoc {
    serde_json::from_value(json!({
        "id": "u", "technique": "paloma-prefetch", "op": op,
        "input": "shopping.app.json", "expect": {"kind": kind, "value": value}
    }))
    .unwrap()
}

#[test]
fn unit_tests_against_prefetch() {
    let manifest = load_manifest(include_str!("../../fixtures/prefetch.manifest.json")).unwrap();
    let dir = Path::new(FIXTURES);
    let actual = prefetched().content_id().to_hex();
    let ok = run_unit_test(&manifest, &utest("model_hash", "pipeline", json!(actual)), dir).unwrap();
    assert!(ok.passed());
    assert!(ok.nfp.execution_time_ms >= 0.0);
    let bad = run_unit_test(&manifest, &utest("model_hash", "pipeline", json!("0000000000000000")), dir)
        .unwrap();
    assert!(matches!(bad.outcome, Outcome::Fail(ref r) if r.contains("mismatch")));

    let facts = json!([{"callback": "onClick#buy", "url": "https://api/a"}]);
    let r = run_unit_test(&manifest, &utest("facts", "callback_analyzer", facts), dir).unwrap();
    assert!(r.passed(), "{:?}", r.outcome);

    let golden = parse_unit_test(include_str!("../../fixtures/prefetch.utest.json")).unwrap();
    let r = run_unit_test(&manifest, &golden, dir).unwrap();
    assert!(r.passed(), "{:?}", r.outcome);

    let mut other = golden.clone();
    other.technique = "nope".into();
    assert!(matches!(
        run_unit_test(&manifest, &other, dir),
        Err(UnitTestError::UnknownTechnique { .. })
    ));
    let mut missing = golden;
    missing.input = "absent.app.json".into();
    assert!(matches!(
        run_unit_test(&manifest, &missing, dir),
        Err(UnitTestError::MissingInput { .. })
    ));
}

#[test]
fn accuracy_fractions() {
    let r = |pass: bool| UnitResult {
        id: "t".into(),
        outcome: if pass { Outcome::Pass } else { Outcome::Fail("x".into()) },
        nfp: UnitNfp { execution_time_ms: 0.0 },
    };
    assert_eq!(accuracy(&[r(true)]), Ok(Ratio::ONE));
    assert_eq!(accuracy(&[r(true), r(false)]), Ok(Ratio::new(1, 2)));
    assert_eq!(accuracy(&[r(true), r(true), r(true), r(false)]), Ok(Ratio::new(3, 4)));
    assert_eq!(accuracy(&[]), Err(EmptyResults));
}
