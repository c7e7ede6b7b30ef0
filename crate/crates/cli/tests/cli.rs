use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn cichon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cichon")).args(args).output().expect("run cichon")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn row(out: &str, label: &str) -> String {
    out.lines()
        .find(|l| l.split_whitespace().next() == Some(label))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap_or_else(|| panic!("no row {label} in\n{out}"))
        .to_string()
}

#[test]
fn derive_cohen_table() {
    let o = cichon(&["derive", "--recipe", "cohen"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 11);
    for left in ["add(N)", "cov(N)", "add(M)", "b", "non(M)"] {
        assert_eq!(row(&out, left), "aleph1", "{left}");
    }
    for right in ["cov(M)", "d", "cof(M)", "non(N)", "cof(N)", "c"] {
        assert_eq!(row(&out, right), "lambda", "{right}");
    }
}

#[test]
fn derive_mod1_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("out.dot");
    let o = cichon(&["derive", "--recipe", "mod1", "--dot", dot.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph") && text.trim_end().ends_with('}'));
    let nodes: Vec<&str> = text.lines().filter(|l| l.contains("[label=")).collect();
    assert_eq!(nodes.len(), 11);
    let mut values: Vec<&str> =
        nodes.iter().map(|l| l.split("\\n").nth(1).unwrap().split('"').next().unwrap()).collect();
    values.sort();
    values.dedup();
    // with the aleph1 corner of the diagram these are the six values
    assert_eq!(values, ["lambda1", "lambda2", "lambda3", "lambda4", "lambda5"]);
    assert_eq!(text.matches("->").count(), 14);
}

#[test]
fn derive_broken_reports_missing_assumption() {
    let o = cichon(&["derive", &fixture("broken.rec"), "--recipe", "broken"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing assumption"), "{}", stderr(&o));
}

#[test]
fn derive_json() {
    let dir = tempfile::tempdir().unwrap();
    let js = dir.path().join("out.json");
    let o = cichon(&["derive", "--recipe", "hechler", "--json", js.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(v["pinned"], true);
    assert_eq!(v["constellation"]["addN"], "aleph1");
    assert_eq!(v["constellation"]["b"], "lambda");
}

#[test]
fn unknown_recipe_is_input_error() {
    let o = cichon(&["derive", "--recipe", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn intersect_tables() {
    let o = cichon(&["intersect", "--tables"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let blocks: Vec<&str> = out.split("== ").skip(1).collect();
    assert_eq!(blocks.len(), 9);
    assert!(blocks[2].starts_with("step 1.2 =="));
    assert!(blocks[2].contains("4 | lambda4b, lambda4d | b=lambda4b d=lambda4d"), "{}", blocks[2]);
    assert!(out.contains("Lambda_4 = (lambda4d x lambda4b)"));
    for (label, v) in [
        ("add(N)", "lambda1b"),
        ("cov(N)", "lambda2b"),
        ("b", "lambda3b"),
        ("non(M)", "lambda4b"),
        ("cov(M)", "lambda4d"),
        ("d", "lambda3d"),
        ("non(N)", "lambda2d"),
        ("cof(N)", "lambda1d"),
        ("c", "lambdac"),
    ] {
        assert_eq!(row(&out, label), v, "{label}");
    }
}

#[test]
fn intersect_malformed_plan() {
    let o = cichon(&["intersect", &fixture("bad_plan.rec"), "--plan", "p"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing chain"), "{}", stderr(&o));
}

#[test]
fn finite_commands() {
    let o = cichon(&["finite", "d", &fixture("cones3.sys")]);
    assert_eq!(stdout(&o).trim(), "2");
    let o = cichon(&["finite", "b", &fixture("le3.sys")]);
    assert_eq!(stdout(&o).trim(), "inf");
    let o = cichon(&["finite", "search", &fixture("id2.sys"), &fixture("id3.sys")]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("psi_minus:") && out.contains("psi_plus:"), "{out}");
    let o = cichon(&["finite", "search", &fixture("id3.sys"), &fixture("id2.sys")]);
    assert_eq!(stdout(&o).trim(), "none");
    let o = cichon(&["finite", "dual", &fixture("le3.sys")]);
    assert_eq!(stdout(&o), "3 3\n011\n001\n000\n");
}

#[test]
fn finite_parse_error() {
    let o = cichon(&["finite", "d", &fixture("broken.rec")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_assignments() {
    let o = cichon(&["check"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok");
    let o = cichon(&["check", &fixture("mod1_assign.rec"), "--assign", "mod1"]);
    assert_eq!(stdout(&o).trim(), "ok");
    let o = cichon(&["check", &fixture("mod1_assign.rec"), "--assign", "swapped"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("b <= non(M)"), "{}", stdout(&o));
    let o = cichon(&["check", &fixture("mod1_assign.rec"), "--assign", "partial"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cofN"), "{}", stderr(&o));
}

#[test]
fn trace_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.txt");
    for recipe in ["evdiff", "mod5", "gksmax"] {
        let o = cichon(&["derive", "--recipe", recipe, "--trace"]);
        std::fs::write(&path, &o.stdout).unwrap();
        let r = cichon(&["replay", "--recipe", recipe, "--trace", path.to_str().unwrap()]);
        assert!(r.status.success(), "{recipe}: {}", stderr(&r));
    }
    let o = cichon(&["intersect", "--trace"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let r = cichon(&["replay", "--plan", "cichon_max", "--trace", path.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
}

#[test]
fn tampered_trace_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.txt");
    let o = cichon(&["derive", "--recipe", "random", "--trace"]);
    let text = stdout(&o);
    // claim the last transitivity step with its premises reversed
    let line = text.lines().rfind(|l| l.contains("[transitivity; ")).unwrap();
    let (head, just) = line.split_once("[transitivity; ").unwrap();
    let (prem, rest) = just.split_once(';').unwrap();
    let flipped: Vec<&str> = prem.split(',').rev().collect();
    let bad = format!("{head}[transitivity; {};{rest}", flipped.join(","));
    std::fs::write(&path, text.replace(line, &bad)).unwrap();
    let r = cichon(&["replay", "--recipe", "random", "--trace", path.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1), "{}", stderr(&r));
}

#[test]
fn builtin_sources_parse_back() {
    for name in ["hechler", "mod2", "bcm", "cichon_max"] {
        let o = cichon(&["builtin", name]);
        let text = stdout(&o);
        assert!(cichon::format::parse(&text).is_ok(), "{name}");
    }
}
