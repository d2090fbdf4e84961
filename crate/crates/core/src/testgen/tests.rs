use std::collections::BTreeSet;

use serde_json::json;

use super::*;
use crate::diff::diff_apps;
use crate::model::{app_model_from_value, parse_app_model, Successors};
use crate::techniques::{prefetch_instrumenter, PrefetchPoint};

fn shopping() -> AppModel {
    parse_app_model(include_str!("../../fixtures/shopping.app.json")).unwrap()
}

fn single(params: &[&str], nodes: serde_json::Value) -> AppModel {
    let entry = nodes[0]["id"].as_str().unwrap().to_string();
    app_model_from_value(&json!({
        "app_id": "t", "version": "1",
        "callbacks": [{"name": "cb", "params": params, "entry": entry, "nodes": nodes}]
    }))
    .unwrap()
}

fn branch(id: &str, var: &str, cmp: &str, c: i64, then: &str, otherwise: &str) -> serde_json::Value {
    json!({"id": id, "op": {"kind": "branch", "var": var, "cmp": cmp, "const": c}, "then": then, "else": otherwise})
}

fn compute(id: &str, next: &str) -> serde_json::Value {
    json!({"id": id, "op": {"kind": "compute", "cost_ms": 1}, "next": next})
}

fn exit(id: &str) -> serde_json::Value {
    json!({"id": id, "op": {"kind": "exit"}})
}

/// k branches in sequence, each on its own variable.
fn sequential(k: usize) -> AppModel {
    let mut nodes = Vec::new();
    let vars: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
    for i in 0..k {
        let join = if i + 1 == k { "z".to_string() } else { format!("b{}", i + 1) };
        nodes.push(branch(&format!("b{i}"), &vars[i], "<", 0, &format!("t{i}"), &format!("e{i}")));
        nodes.push(compute(&format!("t{i}"), &join));
        nodes.push(compute(&format!("e{i}"), &join));
    }
    nodes.push(exit("z"));
    let params: Vec<&str> = vars.iter().map(String::as_str).collect();
    single(&params, serde_json::Value::Array(nodes))
}

/// Exhaustive walk of an acyclic callback.
fn oracle_paths(cb: &Callback, at: &str, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    prefix.push(at.to_string());
    let node = cb.node(at).unwrap();
    match &node.succ {
        Successors::None => out.push(prefix.clone()),
        Successors::Next(n) => oracle_paths(cb, n, prefix, out),
        Successors::Branch { then, otherwise } => {
            oracle_paths(cb, then, prefix, out);
            oracle_paths(cb, otherwise, prefix, out);
        }
    }
    prefix.pop();
}

#[test]
fn straight_line_has_one_path() {
    let m = single(&[], json!([compute("a", "z"), exit("z")]));
    let paths = enumerate_paths(&m.callbacks[0], 2, 256).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].nodes, vec!["a", "z"]);
    assert_eq!(paths[0].path_id, crate::fnv1a64(b"a/z"));
}

#[test]
fn single_branch_has_two_paths_then_first() {
    let cb = &shopping().callbacks[0];
    let paths = enumerate_paths(cb, 2, 256).unwrap();
    assert_eq!(paths.len(), 2);
    assert_eq!(paths[0].nodes, vec!["n0", "n1", "n2", "n4", "n5"]);
    assert_eq!(paths[0].path_id.to_hex(), "ccb87bbe13186163");
    assert_eq!(paths[1].nodes, vec!["n0", "n1", "n3", "n4", "n5"]);
}

#[test]
fn sequential_branches_match_oracle() {
    for k in 1..=4 {
        let m = sequential(k);
        let cb = &m.callbacks[0];
        let paths = enumerate_paths(cb, 2, 256).unwrap();
        let mut oracle = Vec::new();
        oracle_paths(cb, &cb.entry, &mut Vec::new(), &mut oracle);
        assert_eq!(paths.len(), 1 << k);
        let got: Vec<Vec<String>> = paths.into_iter().map(|p| p.nodes).collect();
        assert_eq!(got, oracle);
    }
}

#[test]
fn explosion_is_reported() {
    let m = sequential(3);
    assert_eq!(
        enumerate_paths(&m.callbacks[0], 2, 7),
        Err(TestgenError::PathExplosion {
            callback: "cb".into(),
            limit: 7
        })
    );
    assert_eq!(enumerate_paths(&m.callbacks[0], 2, 8).unwrap().len(), 8);
}

#[test]
fn loop_bound_limits_back_edges() {
    // a: x < 5 ? b : z ; b -> a (back edge)
    let m = single(
        &["x"],
        json!([branch("a", "x", "<", 5, "b", "z"), compute("b", "a"), exit("z")]),
    );
    let cb = &m.callbacks[0];
    assert_eq!(
        back_edges(cb).into_iter().collect::<Vec<_>>(),
        vec![("b".to_string(), "a".to_string())]
    );
    for bound in 0..4 {
        let paths = enumerate_paths(cb, bound, 256).unwrap();
        assert_eq!(paths.len(), bound as usize + 1);
    }
    // Only the zero-iteration path is feasible: branch atoms read inputs only.
    let paths = enumerate_paths(cb, 2, 256).unwrap();
    let feasible: Vec<_> = paths
        .iter()
        .filter(|p| matches!(solve_path_condition(p, cb, None), Solution::Feasible(_)))
        .collect();
    assert_eq!(feasible.len(), 1);
    assert_eq!(feasible[0].nodes, vec!["a", "z"]);
}

#[test]
fn interval_atoms() {
    assert_eq!(IntervalSet::atom(Cmp::Lt, i64::MIN), IntervalSet::range(1, 0));
    assert_eq!(
        IntervalSet::atom(Cmp::Ne, 3).intervals(),
        &[(i64::MIN, 2), (4, i64::MAX)]
    );
    let s = IntervalSet::atom(Cmp::Ge, 3)
        .intersect(&IntervalSet::atom(Cmp::Ne, 3))
        .intersect(&IntervalSet::atom(Cmp::Le, 5));
    assert_eq!(s.intervals(), &[(4, 5)]);
}

use crate::model::Cmp;

#[test]
fn solver_examples() {
    let cb = shopping().callbacks.remove(0);
    let paths = enumerate_paths(&cb, 2, 256).unwrap();
    let x = |s: Solution| match s {
        Solution::Feasible(m) => m["x"],
        Solution::Infeasible(r) => panic!("{r}"),
    };
    assert_eq!(x(solve_path_condition(&paths[0], &cb, None)), -1000);
    assert_eq!(x(solve_path_condition(&paths[1], &cb, None)), 10);
    assert_eq!(x(solve_path_condition(&paths[0], &cb, Some((0, 20)))), 0);

    // x >= 3, x != 3, x <= 5 -> 4, checked against a scan of the window.
    let m = single(
        &["x"],
        json!([
            branch("a", "x", ">=", 3, "b", "z"),
            branch("b", "x", "!=", 3, "c", "z"),
            branch("c", "x", "<=", 5, "d", "z"),
            compute("d", "z"),
            exit("z")
        ]),
    );
    let cb = &m.callbacks[0];
    let first = &enumerate_paths(cb, 2, 256).unwrap()[0];
    assert_eq!(first.nodes, vec!["a", "b", "c", "d", "z"]);
    let scan = (-1000..=1000).find(|v| (4..=5).contains(v)).unwrap();
    assert_eq!(x(solve_path_condition(first, cb, None)), scan);
}

#[test]
fn window_fallback_to_true_minimum() {
    let m = single(&["x"], json!([branch("a", "x", ">", 5000, "z", "z2"), exit("z"), compute("z2", "z")]));
    let cb = &m.callbacks[0];
    let p = &enumerate_paths(cb, 2, 256).unwrap()[0];
    assert_eq!(
        solve_path_condition(p, cb, None),
        Solution::Feasible([("x".to_string(), 5001)].into())
    );
}

#[test]
fn contradiction_is_infeasible() {
    let m = single(
        &["x"],
        json!([
            branch("a", "x", "<", 10, "b", "z"),
            branch("b", "x", ">", 20, "c", "z"),
            compute("c", "z"),
            exit("z")
        ]),
    );
    let cb = &m.callbacks[0];
    let p = &enumerate_paths(cb, 2, 256).unwrap()[0];
    assert!(matches!(solve_path_condition(p, cb, None), Solution::Infeasible(_)));

    let mut instr = m.clone();
    instr.callbacks[0].nodes[2].op = crate::model::Op::Compute { cost_ms: 9 };
    let suite = generate_tests(&m, &instr, &diff_apps(&m, &instr), &GenConfig::default()).unwrap();
    assert_eq!(suite.skipped_infeasible.len(), 1);
    assert_eq!(suite.skipped_infeasible[0].path_id, p.path_id);
    assert_eq!(suite.generated.len(), 2);
}

#[test]
fn unchanged_gives_empty_suite() {
    let m = shopping();
    let suite = generate_tests(&m, &m, &diff_apps(&m, &m), &GenConfig::default()).unwrap();
    assert!(suite.generated.is_empty());
    let forced = GenConfig {
        force_all: true,
        ..GenConfig::default()
    };
    let suite = generate_tests(&m, &m, &diff_apps(&m, &m), &forced).unwrap();
    assert_eq!(suite.generated.len(), 2);
}

#[test]
fn prefetch_suite() {
    let m = shopping();
    let p = prefetch_instrumenter(
        &m,
        &[PrefetchPoint {
            callback: "onClick#buy".into(),
            url: "https://api/a".into(),
        }],
    )
    .unwrap();
    let suite = generate_tests(&m, &p, &diff_apps(&m, &p), &GenConfig::default()).unwrap();
    let xs: Vec<i64> = suite.generated.iter().map(|t| t.inputs["x"]).collect();
    assert_eq!(xs, vec![-1000, 10]);
    assert!(suite.generated.iter().all(|t| t.source == TestSource::Original));
    let ids: BTreeSet<_> = suite.generated.iter().map(|t| &t.id).collect();
    assert_eq!(ids.len(), 2);
    assert_eq!(suite.generated[0].id, "onClick#buy@ccb87bbe13186163");
    let again = generate_tests(&m, &p, &diff_apps(&m, &p), &GenConfig::default()).unwrap();
    assert_eq!(suite.to_json(), again.to_json());
}

#[test]
fn added_callback_uses_instrumented_paths() {
    let m = shopping();
    let mut instr = m.clone();
    let mut extra = instr.callbacks[0].clone();
    extra.name = "onLoad".into();
    instr.callbacks.push(extra);
    let suite = generate_tests(&m, &instr, &diff_apps(&m, &instr), &GenConfig::default()).unwrap();
    assert_eq!(suite.generated.len(), 2);
    assert!(suite
        .generated
        .iter()
        .all(|t| t.source == TestSource::InstrumentedOnly && t.callback == "onLoad"));
}
