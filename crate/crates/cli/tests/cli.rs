use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const ELECTRICAL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/models/electrical.evb");
const ELECTRICAL_BAT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/models/electrical_bat.evb");
const ELECTRICAL_TP: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/models/electrical.tp");

// The guard on y is dropped when only x is kept, so e becomes possible.
const WEAKENED: &str = "VARS x : 0..2 y : 0..1\nINIT x, y := 0, 0\nEVENT e == y = 1 ==> x := 1\nEVENT f == x := 2\n";

fn evb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evb")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn vars_by_both_methods() {
    let o = evb(&["vars", ELECTRICAL, "--observed", "Bat", "--method", "dataflow"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["names"], serde_json::json!(["Bat"]));
    let o = evb(&["vars", ELECTRICAL, "--observed", "H", "--method", "modflow"]);
    assert_eq!(json(&o)["names"], serde_json::json!(["H", "Bat"]));
    assert_eq!(json(&o)["provenance"]["Bat"], "relevant");
    let o = evb(&["vars", ELECTRICAL, "--observed", ""]);
    assert_eq!(json(&o)["names"], serde_json::json!([]));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.evb", "VARS x : 0..2\nEVENT e == x := q\n");
    let o = evb(&["vars", bad.to_str().unwrap(), "--observed", "x"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.evb:2:"));
    assert_eq!(code(&evb(&["vars", ELECTRICAL, "--observed", "Nope"])), 2);
    assert_eq!(code(&evb(&["check", "/no/such/file.evb"])), 2);
}

#[test]
fn abstract_writes_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bat.evb");
    let o = evb(&["abstract", ELECTRICAL, "--observed", "Bat", "--out", out.to_str().unwrap(), "--check", "bisim"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(ELECTRICAL_BAT).unwrap());
}

#[test]
fn failed_bisimulation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "w.evb", WEAKENED);
    let m = m.to_str().unwrap();
    let sim = evb(&["abstract", m, "--observed", "x", "--method", "dataflow", "--check", "sim"]);
    assert_eq!(code(&sim), 0);
    let bisim = evb(&["abstract", m, "--observed", "x", "--method", "dataflow", "--check", "bisim"]);
    assert_eq!(code(&bisim), 3);
    assert!(String::from_utf8_lossy(&bisim.stderr).contains("bisimulation fails"));
}

#[test]
fn lts_formats_and_cap() {
    let o = evb(&["lts", ELECTRICAL_BAT]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["states"].as_array().unwrap().len(), 7);
    assert_eq!(v["transitions"].as_array().unwrap().len(), 29);
    let dot = evb(&["lts", ELECTRICAL, "--format", "dot"]);
    assert!(stdout(&dot).starts_with("digraph"));
    assert_eq!(code(&evb(&["lts", ELECTRICAL, "--cap", "1"])), 5);
    let dir = tempfile::tempdir().unwrap();
    let skip = write(dir.path(), "s.evb", "EVENT e == skip\n");
    assert_eq!(json(&evb(&["lts", skip.to_str().unwrap()]))["states"].as_array().unwrap().len(), 1);
}

#[test]
fn state_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_evb")).args(["lts", ELECTRICAL]).env("EVB_STATE_CAP", "3").output().unwrap();
    assert_eq!(code(&o), 5);
}

#[test]
fn testgen_reports_full_instantiation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tests.json");
    let o = evb(&["testgen", ELECTRICAL, "--observed", "Bat", "--tp", ELECTRICAL_TP, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("purpose"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    for run in doc.as_array().unwrap() {
        assert_eq!(run["report"]["ratio"], 1.0);
        for t in run["tests"].as_array().unwrap() {
            assert!(t["concrete"].is_array());
        }
    }
}

#[test]
fn testgen_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.tp", "// nothing\n");
    let o = evb(&["testgen", ELECTRICAL, "--observed", "Bat", "--tp", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);
    let unsat = write(dir.path(), "unsat.tp", "Missing\n");
    assert_eq!(code(&evb(&["testgen", ELECTRICAL, "--observed", "Bat", "--tp", unsat.to_str().unwrap()])), 4);
    let m = write(dir.path(), "w.evb", WEAKENED);
    let tp = write(dir.path(), "e.tp", "e\n");
    let o = evb(&["testgen", m.to_str().unwrap(), "--observed", "x", "--method", "dataflow", "--tp", tp.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0/1"));
}

#[test]
fn check_and_selfcheck() {
    assert_eq!(code(&evb(&["check", ELECTRICAL])), 0);
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "b.evb", "VARS x : 0..3\nINVARIANT x : 0..3 & x < 2\nINIT x := 0\nEVENT inc == x < 3 ==> x := x + 1\n");
    let o = evb(&["check", broken.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("inc breaks the invariant from x=1"));
    assert_eq!(code(&evb(&["selfcheck", "--seed", "42", "--count", "20"])), 0);
}
