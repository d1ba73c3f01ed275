use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn lbemc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lbemc"))
        .args(args)
        .env_remove("LBEMC_SOLVER")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    if let Some(s) = stdin {
        input.write_all(s.as_bytes()).unwrap();
    }
    drop(input);
    child.wait_with_output().unwrap()
}

fn gen(dir: &Path, n: usize, bug: bool) -> String {
    let n = n.to_string();
    let mut args = vec!["gen-test-locks", n.as_str()];
    if bug {
        args.push("--bug");
    }
    let out = lbemc(&args, None);
    assert!(out.status.success());
    let path = dir.join(format!("test_locks_{n}{}.imp", if bug { "_bug" } else { "" }));
    fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

fn stats(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lbe_boolean_needs_no_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), 5, false);
    let json = dir.path().join("out.json");
    let out = lbemc(
        &["--encoding", "lbe", "--abstraction", "boolean", &file, "--stats", json.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let s = stats(&json);
    assert_eq!(s["verdict"], "safe");
    assert_eq!(s["refinement_steps"], 0);
    assert_eq!(s["predicates"]["total"], 0);
    for key in ["art_size", "solver_queries", "rule_applications", "wall_time_ms"] {
        assert!(s[key].is_number(), "{key}");
    }
    for key in ["avg", "max"] {
        assert!(s["predicates"][key].is_number(), "{key}");
    }
}

#[test]
fn sbe_cartesian_refines() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), 3, false);
    let json = dir.path().join("out.json");
    let out = lbemc(
        &["--encoding", "sbe", "--abstraction", "cartesian", &file, "--stats", json.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stats(&json)["refinement_steps"].as_u64().unwrap() > 0);
}

#[test]
fn bug_exits_one_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), 3, true);
    for enc in ["sbe", "lbe"] {
        let out = lbemc(&["--encoding", enc, &file], None);
        assert_eq!(out.status.code(), Some(1), "{enc}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.starts_with("UNSAFE"));
        assert!(text.contains("counterexample:"));
        assert!(text.contains("-> 1:"), "path should end at the error location: {text}");
    }
}

#[test]
fn unknown_when_refinements_exhausted() {
    let out = lbemc(
        &["--encoding", "sbe", "--max-refinements", "0", "-"],
        Some("int x; x = 0; if (x > 0) { error(); }"),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("UNKNOWN"));
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(lbemc(&["--encoding", "xyz", "a.imp"], None).status.code(), Some(3));
    assert_eq!(lbemc(&["/nonexistent/file.imp"], None).status.code(), Some(3));
    assert_eq!(lbemc(&[], None).status.code(), Some(3));
    let out = lbemc(&["-"], Some("int x; y = 1;"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("1:"));
    assert_eq!(lbemc(&["gen-test-locks", "0"], None).status.code(), Some(3));
}

#[test]
fn missing_external_solver_is_unknown() {
    let out = Command::new(env!("CARGO_BIN_EXE_lbemc"))
        .args(["--solver", "external", "-"])
        .env("LBEMC_SOLVER", "/nonexistent/solver")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(b"int x; x = 1;")?;
            c.wait_with_output()
        })
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn crosscheck_agrees_on_generated_programs() {
    let dir = tempfile::tempdir().unwrap();
    for (bug, code) in [(false, 0), (true, 1)] {
        let file = gen(dir.path(), 2, bug);
        let out = lbemc(&[&file, "--crosscheck", "1"], None);
        assert_eq!(out.status.code(), Some(code));
    }
}

#[test]
fn crosscheck_flags_disagreement() {
    // Unsafe only with x = 5, outside the searched domain [0, 1].
    let out = lbemc(&["-", "--crosscheck", "1"], Some("int x; assert(x != 5);"));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), 2, false);
    let mut seen = Vec::new();
    for i in 0..2 {
        let json = dir.path().join(format!("s{i}.json"));
        let dot = dir.path().join(format!("c{i}.dot"));
        let art = dir.path().join(format!("a{i}.dot"));
        let trace = dir.path().join(format!("t{i}.jsonl"));
        let out = lbemc(
            &[
                "--encoding",
                "sbe",
                &file,
                "--stats",
                json.to_str().unwrap(),
                "--dot",
                dot.to_str().unwrap(),
                "--art-dot",
                art.to_str().unwrap(),
                "--trace",
                trace.to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(out.status.code(), Some(0));
        let mut s = stats(&json);
        s.as_object_mut().unwrap().remove("wall_time_ms");
        seen.push((
            s.to_string(),
            fs::read_to_string(&dot).unwrap(),
            fs::read_to_string(&art).unwrap(),
            fs::read_to_string(&trace).unwrap(),
        ));
    }
    assert_eq!(seen[0], seen[1]);
    assert!(seen[0].1.starts_with("digraph cfa {"));
    assert!(seen[0].2.starts_with("digraph art {"));
    // SBE does not summarize.
    assert!(seen[0].3.is_empty());
}

#[test]
fn trace_lines_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), 2, false);
    let trace = dir.path().join("t.jsonl");
    let out = lbemc(&[&file, "--trace", trace.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| matches!(l["rule"].as_u64(), Some(0..=2))));
    assert!(lines.iter().any(|l| l["rule"] == 1 && l["to"].is_array()));
}
