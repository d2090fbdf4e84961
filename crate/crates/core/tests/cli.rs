mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn decree(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decree"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture_dir()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    dir
}

#[test]
fn validate_and_hash() {
    let ws = workspace();
    let o = decree(&["validate", "shopping.app.json"], ws.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1 callbacks"));
    let o = decree(&["hash", "shopping.app.json"], ws.path());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("6befc8d64b84c7e2"));
    assert!(text.contains("e7d44c596dbf6aea onClick#buy"));

    std::fs::write(ws.path().join("bad.app.json"), "{\"app_id\": 1}").unwrap();
    assert_eq!(decree(&["validate", "bad.app.json"], ws.path()).status.code(), Some(2));
    assert_eq!(decree(&["validate", "missing.app.json"], ws.path()).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let ws = workspace();
    assert_eq!(decree(&[], ws.path()).status.code(), Some(2));
    assert_eq!(decree(&["frobnicate"], ws.path()).status.code(), Some(2));
    assert_eq!(decree(&["--help"], ws.path()).status.code(), Some(0));
    let o = decree(
        &["difftest", "shopping.app.json", "shopping.app.json", "--monitor", "joules", "-o", "r.json"],
        ws.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_then_difftest() {
    let ws = workspace();
    let o = decree(&["pipeline", "prefetch.manifest.json", "shopping.app.json", "-o", "artifacts.json", "--model-out", "pf.app.json"], ws.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = decree(&["hash", "pf.app.json"], ws.path());
    assert_eq!(stdout(&o).lines().next(), Some("fa15fbc14222f85c"));

    let o = decree(
        &["difftest", "shopping.app.json", "pf.app.json", "--technique", "prefetch.manifest.json", "-o", "report.json"],
        ws.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("2 tests, 2 compared, 2 passed"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path().join("report.json")).unwrap()).unwrap();
    let mut times: Vec<u64> = report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["orig_time_ms"].as_u64().unwrap())
        .collect();
    times.sort();
    assert_eq!(times, vec![7, 123]);
    let text = std::fs::read_to_string(ws.path().join("report.json")).unwrap();
    let last_key = text.lines().rev().find(|l| l.starts_with("  \"")).unwrap();
    assert!(last_key.starts_with("  \"digest\""), "{last_key}");
}

#[test]
fn diff_and_gen_print_json() {
    let ws = workspace();
    let o = decree(&["diff", "shopping.app.json", "shopping_fault.app.json"], ws.path());
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["modified"], serde_json::json!(["onClick#buy"]));
    let o = decree(&["gen", "shopping.app.json", "shopping_fault.app.json", "--bound", "1"], ws.path());
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["generated"].as_array().unwrap().len(), 2);
    assert_eq!(s["config"]["loop_bound"], 1);
}

#[test]
fn unittest_passes_on_frozen_hash() {
    let ws = workspace();
    let o = decree(&["unittest", "prefetch.utest.json", "prefetch.manifest.json"], ws.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("prefetch-shopping: pass"));
    let o = decree(&["unittest", "prefetch.utest.json", "logger.manifest.json"], ws.path());
    assert_eq!(o.status.code(), Some(2), "technique id mismatch");
    let wrong = fixture("prefetch.utest.json").replace("fa15fbc14222f85c", "0000000000000000");
    std::fs::write(ws.path().join("wrong.utest.json"), wrong).unwrap();
    let o = decree(&["unittest", "wrong.utest.json", "prefetch.manifest.json"], ws.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("prefetch-shopping: fail"));
}

#[test]
fn fmt_and_script() {
    let ws = workspace();
    let o = decree(&["fmt", "quickstart.dscr"], ws.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("environment { battery_pct = 80;"));
    let o = decree(&["script", "quickstart.dscr"], ws.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = ws.path().join("runs").join("c7849ac2d61c0908");
    for f in ["script.dscr", "report.json", "models/shop_pf.app.json", "traces/speedup/suite.json"] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
    std::fs::write(ws.path().join("broken.dscr"), "benchmark b = \"nope.app.json\"\n").unwrap();
    let o = decree(&["script", "broken.dscr"], ws.path());
    assert_eq!(o.status.code(), Some(2));
}
