use std::collections::BTreeMap;

use super::*;
use crate::model::{canonical_hash, parse_app_model, serialize_app_model, AppModel, Op};

fn shopping() -> AppModel {
    parse_app_model(include_str!("../../fixtures/shopping.app.json")).unwrap()
}

fn model(text: &str) -> AppModel {
    parse_app_model(text).unwrap()
}

const TWO_REQUESTS: &str = r#"{"app_id": "t", "version": "1", "callbacks": [
  {"name": "onLoad", "params": ["id"], "entry": "a", "nodes": [
    {"id": "a", "op": {"kind": "net_request", "url": [{"lit": "https://api/"}, {"var": "id"}], "resp_bytes": 10, "cacheable": true}, "next": "b"},
    {"id": "b", "op": {"kind": "net_request", "url": [{"lit": "https://api/"}, {"lit": "static"}], "resp_bytes": 10, "cacheable": false}, "next": "c"},
    {"id": "c", "op": {"kind": "net_request", "url": [{"lit": "https://api/static"}], "resp_bytes": 10, "cacheable": true}, "next": "d"},
    {"id": "d", "op": {"kind": "net_request", "url": [{"lit": "https://api/static"}], "resp_bytes": 10, "cacheable": true}, "next": "z"},
    {"id": "z", "op": {"kind": "exit"}}
  ]},
  {"name": "onIdle", "params": [], "entry": "z", "nodes": [{"id": "z", "op": {"kind": "exit"}}]}
]}"#;

#[test]
fn ir_counts_single_node() {
    let m = model(
        r#"{"app_id": "a", "version": "1", "callbacks": [{"name": "c", "params": [], "entry": "n", "nodes": [{"id": "n", "op": {"kind": "exit"}}]}]}"#,
    );
    let ir = ccfg_ir(&m);
    assert_eq!(ir.callbacks[0].node_count, 1);
    assert_eq!(ir.callbacks[0].edge_count, 0);
}

#[test]
fn ir_shopping_shape() {
    let ir = ccfg_ir(&shopping());
    let cb = ir.callback("onClick#buy").unwrap();
    assert_eq!(cb.node_count, 6);
    assert_eq!(cb.edge_count, 6);
    assert_eq!(cb.adjacency["n1"], vec!["n2".to_string(), "n3".to_string()]);
}

#[test]
fn string_analyzer_resolution() {
    let m = model(TWO_REQUESTS);
    let facts = string_analyzer(&m, &ccfg_ir(&m));
    assert_eq!(facts.len(), 4);
    assert_eq!(facts[0].resolution, UrlResolution::Dynamic);
    assert_eq!(
        facts[1].resolution,
        UrlResolution::Resolved("https://api/static".into())
    );

    let s = shopping();
    let facts = string_analyzer(&s, &ccfg_ir(&s));
    assert_eq!(
        facts,
        vec![UrlFact {
            callback: "onClick#buy".into(),
            node: "n2".into(),
            resolution: UrlResolution::Resolved("https://api/a".into()),
        }]
    );
}

#[test]
fn callback_analyzer_points() {
    let m = model(TWO_REQUESTS);
    let facts = string_analyzer(&m, &ccfg_ir(&m));
    // Dynamic and non-cacheable requests give no point; the two cacheable
    // static requests collapse into one.
    let points = callback_analyzer(&m, &facts);
    assert_eq!(
        points,
        vec![PrefetchPoint {
            callback: "onLoad".into(),
            url: "https://api/static".into()
        }]
    );
    let dynamic_only: Vec<_> = facts[..1].to_vec();
    assert!(callback_analyzer(&m, &dynamic_only).is_empty());

    let s = shopping();
    let points = callback_analyzer(&s, &string_analyzer(&s, &ccfg_ir(&s)));
    assert_eq!(
        points,
        vec![PrefetchPoint {
            callback: "onClick#buy".into(),
            url: "https://api/a".into()
        }]
    );
}

#[test]
fn prefetch_inserts_new_entry() {
    let s = shopping();
    assert_eq!(
        serialize_app_model(&prefetch_instrumenter(&s, &[]).unwrap()),
        serialize_app_model(&s)
    );
    let point = PrefetchPoint {
        callback: "onClick#buy".into(),
        url: "https://api/a".into(),
    };
    let out = prefetch_instrumenter(&s, &[point]).unwrap();
    let cb = out.callback("onClick#buy").unwrap();
    assert_eq!(cb.nodes.len(), 7);
    let entry = cb.node(&cb.entry).unwrap();
    assert_eq!(
        entry.op,
        Op::Prefetch {
            url: "https://api/a".into()
        }
    );
    assert_eq!(entry.targets(), vec!["n0"]);
    out.validate().unwrap();
    assert_eq!(s, shopping(), "input untouched");
}

#[test]
fn prefetch_leaves_other_callbacks_identical() {
    let m = model(TWO_REQUESTS);
    let point = PrefetchPoint {
        callback: "onLoad".into(),
        url: "https://api/static".into(),
    };
    let out = prefetch_instrumenter(&m, &[point]).unwrap();
    assert_eq!(
        out.callback("onIdle").unwrap().canonical_text(),
        m.callback("onIdle").unwrap().canonical_text()
    );
    let bad = PrefetchPoint {
        callback: "nope".into(),
        url: "u".into(),
    };
    assert_eq!(
        prefetch_instrumenter(&m, &[bad]),
        Err(TechniqueError::UnknownCallback("nope".into()))
    );
}

#[test]
fn logger_adds_one_log_per_ui_or_net_node() {
    let s = shopping();
    let out = logger_instrumenter(&s);
    let cb = out.callback("onClick#buy").unwrap();
    assert_eq!(cb.nodes.len(), 9);
    out.validate().unwrap();
    // Each logged node is immediately preceded by its log node.
    for target in ["n2", "n3", "n4"] {
        let log = cb
            .nodes
            .iter()
            .find(|n| matches!(&n.op, Op::Log { tag } if tag == target))
            .unwrap();
        assert_eq!(log.targets(), vec![target]);
        let preds: Vec<_> = cb
            .nodes
            .iter()
            .filter(|n| n.targets().contains(&target))
            .map(|n| n.id.as_str())
            .collect();
        assert_eq!(preds, vec![log.id.as_str()]);
    }
}

#[test]
fn logger_without_targets_is_identity() {
    let m = model(
        r#"{"app_id": "a", "version": "1", "callbacks": [{"name": "c", "params": [], "entry": "n", "nodes": [
          {"id": "n", "op": {"kind": "compute", "cost_ms": 3}, "next": "x"}, {"id": "x", "op": {"kind": "exit"}}]}]}"#,
    );
    assert_eq!(
        serialize_app_model(&logger_instrumenter(&m)),
        serialize_app_model(&m)
    );
}

#[test]
fn logger_handles_entry_and_one_ui_update() {
    let m = model(
        r#"{"app_id": "a", "version": "1", "callbacks": [{"name": "c", "params": [], "entry": "u", "nodes": [
          {"id": "u", "op": {"kind": "ui_update", "widget": "w", "value": {"lit": "v"}}, "next": "x"}, {"id": "x", "op": {"kind": "exit"}}]}]}"#,
    );
    let out = logger_instrumenter(&m);
    let cb = &out.callbacks[0];
    assert_eq!(cb.nodes.len(), 3);
    assert_eq!(cb.entry, "log.u");
}

#[test]
fn fault_changes_exactly_one_node() {
    let s = shopping();
    let out = fault_instrumenter(&s, "onClick#buy", "label1").unwrap();
    let (a, b) = (&s.callbacks[0], &out.callbacks[0]);
    let differing = a
        .nodes
        .iter()
        .zip(&b.nodes)
        .filter(|(x, y)| x != y)
        .count();
    assert_eq!(differing, 1);
    assert_ne!(canonical_hash(a), canonical_hash(b));
    assert!(matches!(
        fault_instrumenter(&s, "onClick#buy", "nothing"),
        Err(TechniqueError::NoMatchingUiUpdate { .. })
    ));
    assert!(matches!(
        fault_instrumenter(&s, "nope", "label1"),
        Err(TechniqueError::UnknownCallback(_))
    ));
}

#[test]
fn os_policy_sets() {
    let cfg = |v: &str| BTreeMap::from([("blocked".to_string(), v.to_string())]);
    assert!(os_policy_instrumenter(&cfg(""))
        .blocked_intent_actions
        .is_empty());
    assert_eq!(
        os_policy_instrumenter(&cfg("EVIL"))
            .blocked_intent_actions
            .into_iter()
            .collect::<Vec<_>>(),
        vec!["EVIL"]
    );
    assert_eq!(
        os_policy_instrumenter(&cfg("A,B,A"))
            .blocked_intent_actions
            .into_iter()
            .collect::<Vec<_>>(),
        vec!["A", "B"]
    );
    assert!(os_policy_instrumenter(&BTreeMap::new())
        .blocked_intent_actions
        .is_empty());
}

#[test]
fn registry_ids_round_trip() {
    for b in Builtin::ALL {
        assert_eq!(Builtin::from_id(b.id()), Some(b));
    }
    assert_eq!(Builtin::from_id("optimizer"), None);
}
