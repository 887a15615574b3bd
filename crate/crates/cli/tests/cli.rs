use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    p.to_string_lossy().into_owned()
}

fn mcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcl")).args(args).output().expect("mcl runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// A fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mcl-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_verifies_the_family() {
    let o = mcl(&["check", &corpus("family.mcl")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("overall: verified"));
}

#[test]
fn check_reports_violation() {
    let o = mcl(&["check", &corpus("faulty/low_person.mcl")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness"));
}

#[test]
fn check_reports_unverified() {
    let d = scratch("unverified");
    let f = write(
        &d,
        "sq.mcl",
        "class A { method f(n: int) { memreq<A>(n); var m: int = n * n; for i = 1 .. m { var a: A = new A(); } } }",
    );
    assert_eq!(code(&mcl(&["check", &f])), 2);
}

#[test]
fn object_mode() {
    let o = mcl(&["check", "--mode", "object", &corpus("family_object.mcl")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn syntax_errors_are_json_diagnostics() {
    let d = scratch("syntax");
    let f = write(&d, "bad.mcl", "class A { method m( { }");
    let o = mcl(&["check", &f]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8(o.stderr).unwrap();
    let first: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(first["severity"], "error");
    assert!(first["file"].as_str().unwrap().ends_with("bad.mcl"));
    assert!(first["line"].as_u64().unwrap() >= 1);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&mcl(&[])), 3);
    assert_eq!(code(&mcl(&["check", "--bogus", &corpus("family.mcl")])), 3);
    assert_eq!(code(&mcl(&["check", "/nonexistent/file.mcl"])), 3);
    assert_eq!(code(&mcl(&["--help"])), 0);
}

#[test]
fn json_output_is_deterministic() {
    for args in [
        vec!["check", "--format", "json", &corpus("family.mcl"), &corpus("temporaries.mcl")],
        vec!["validate", "--format", "json", &corpus("faulty/off_by_one.mcl")],
        vec!["run", "--format", "json", &corpus("family.mcl"), "--entry", "Town.CreateFamily", "--args", r#"["Doe", 3]"#],
    ] {
        let a = mcl(&args);
        let b = mcl(&args);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn instrument_emits_source() {
    let d = scratch("emit");
    let out = d.join("temps.inst.mcl");
    let o = mcl(&["instrument", &corpus("temporaries.mcl"), "--emit", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.matches("ensure(m_").count(), 3);
    assert!(text.contains("ghost m_MemReq_A += maxCalls_A + sumCalls_A;"));
    // the emitted program checks like the original
    assert_eq!(code(&mcl(&["check", out.to_str().unwrap()])), 0);
}

#[test]
fn ptg_writes_one_dot_per_method() {
    let d = scratch("dot");
    let o = mcl(&["ptg", &corpus("family.mcl"), "--dot", d.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let dot = fs::read_to_string(d.join("Family.AddMember.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("_Members"));
    assert!(d.join("Person.Person.dot").exists());
}

#[test]
fn run_prints_trace_and_result() {
    let o = mcl(&[
        "run",
        "--format",
        "json",
        &corpus("family.mcl"),
        "--entry",
        "Town.CreateFamily",
        "--args",
        r#"["Doe", ["a", "b", "c"]]"#,
    ]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["event"], "call");
    let allocs = lines.iter().filter(|e| e["event"] == "alloc").count();
    // family, its array, three people and three loggers
    assert_eq!(allocs, 8);
    let last = lines.last().unwrap();
    assert_eq!(last["event"], "result");
    assert!(last["assertion_failures"].as_array().unwrap().is_empty());
}

#[test]
fn run_instrumented_trips_ensure() {
    let o = mcl(&["run", &corpus("faulty/off_by_one.mcl"), "--entry", "Pool.warm", "--args", "[3]", "--instrumented"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&mcl(&["validate", &corpus("family.mcl")])), 0);
    assert_eq!(code(&mcl(&["validate", "--gc", "method-exit", &corpus("big_family.mcl")])), 0);
    let o = mcl(&["validate", &corpus("faulty/low_person.mcl")]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&mcl(&["validate", "--entry", "Nope.nope", &corpus("family.mcl")])), 3);
}
