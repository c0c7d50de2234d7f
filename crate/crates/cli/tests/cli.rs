use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn locc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locc")).args(args).env_remove("LOCC_TOL").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn emit(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    let out = locc(&["catalog", "emit", name, "--out", p(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn catalog_list_and_emit() {
    let out = locc(&["catalog", "list"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 5);

    let dir = TempDir::new().unwrap();
    let b = emit(&dir, "bennett9");
    let v = locc(&["validate", p(&b)]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).starts_with(r#"{"passes":true,"#));

    let cube = fs::read_to_string(emit(&dir, "cube64")).unwrap();
    assert_eq!(cube.matches(r#""label":"#).count(), 64);

    assert_eq!(code(&locc(&["catalog", "emit", "nosuch"])), 64);
}

#[test]
fn check_verdicts_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = locc(&["check", p(&emit(&dir, "bennett9")), "--mode=complete"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout(&out).trim(), "indistinguishable");

    let out = locc(&["check", p(&emit(&dir, "comp2x2")), "--mode=complete", "--trace"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("distinguishable\nmeasure party 0 (2 outcomes)\n"));
    assert_eq!(text.matches("leaf ").count(), 4);
    assert_eq!(text.matches("measure party 1").count(), 2);

    let out = locc(&["check", p(&emit(&dir, "finkelstein9")), "--mode=incomplete"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout(&out).trim(), "unknown (projective-stuck)");

    // Claims incompleteness, so complete mode is refused.
    assert_eq!(code(&locc(&["check", p(&emit(&dir, "finkelstein9")), "--mode=complete"])), 65);
}

#[test]
fn json_output_is_stable_and_echoes_tol() {
    let dir = TempDir::new().unwrap();
    let b = emit(&dir, "grid16");
    let a = locc(&["check", p(&b), "--json"]);
    let again = locc(&["check", p(&b), "--json"]);
    assert_eq!(a.stdout, again.stdout);
    let text = stdout(&a);
    assert!(text.starts_with(r#"{"verdict":"indistinguishable","tol":1.0000000000000001e-9,"certificate":"#));

    let loose = locc(&["check", p(&b), "--json", "--tol", "1e-6"]);
    assert!(stdout(&loose).contains(r#""tol":9.9999999999999995e-7"#));
    let env = Command::new(env!("CARGO_BIN_EXE_locc"))
        .args(["check", p(&b), "--json"])
        .env("LOCC_TOL", "1e-6")
        .output()
        .unwrap();
    assert_eq!(env.stdout, loose.stdout);
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(code(&locc(&[])), 64);
    assert_eq!(code(&locc(&["frobnicate"])), 64);
    assert_eq!(code(&locc(&["check", "x.json", "--mode=sideways"])), 64);
    assert_eq!(code(&locc(&["check", "x.json", "--tol", "-1"])), 64);
    assert_eq!(code(&locc(&["--help"])), 0);

    let dir = TempDir::new().unwrap();
    assert_eq!(code(&locc(&["check", p(&dir.path().join("missing.json"))])), 65);
    let bad = write(&dir, "bad.json", "{not json");
    let out = locc(&["check", p(&bad)]);
    assert_eq!(code(&out), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
    let zero = write(
        &dir,
        "zero.json",
        r#"{"name":"z","dims":[1],"complete":false,"states":[{"label":"a","vectors":[[[0,0]]]}]}"#,
    );
    assert_eq!(code(&locc(&["check", p(&zero)])), 65);
}

#[test]
fn simulate_commands() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "finkelstein9");
    let out = locc(&["simulate", p(&f), "--builtin=finkelstein-povm"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with(r#"{"perfect":true,"#));
    assert!(text.contains(r#"{"path":[1,0,0,0],"announce":"Ψ1","probability":5.0000000000000"#));

    let trivial = write(&dir, "trivial.json", r#"{"announce":null}"#);
    let b = emit(&dir, "bennett9");
    let out = locc(&["simulate", p(&b), p(&trivial)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with(r#"{"perfect":false,"#));

    let c = emit(&dir, "comp2x2");
    let verdict = locc(&["check", p(&c), "--json"]);
    let tree = write(&dir, "tree.json", &stdout(&verdict));
    assert_eq!(code(&locc(&["simulate", p(&c), p(&tree)])), 0);

    // Only one of the two projectors: the instrument is incomplete.
    let half = write(
        &dir,
        "half.json",
        r#"{"party":0,"operators":[{"rows":2,"cols":2,"entries":[[1,0],[0,0],[0,0],[0,0]]}],"children":[{"announce":"00"}]}"#,
    );
    let out = locc(&["simulate", p(&c), p(&half)]);
    assert_eq!(code(&out), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("instrument"));

    assert_eq!(code(&locc(&["simulate", p(&c)])), 64);
    assert_eq!(code(&locc(&["simulate", p(&c), "--builtin=nope"])), 64);
}

#[test]
fn decompose_operators() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", r#"{"rows":2,"cols":2,"entries":[[1,0],[0,0],[0,0],[1,0]]}"#);
    let out = locc(&["decompose", p(&id)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with(r#"{"sigmas":[1.0000000000000000e0,1.0000000000000000e0],"#));
    assert!(stdout(&out).contains(r#""physical":true"#));

    // √(2/3)|x*⟩⟨x*| with x* = |2⟩.
    let s = (2.0f64 / 3.0).sqrt();
    let c = write(&dir, "c.json", &format!(r#"{{"rows":2,"cols":2,"entries":[[0,0],[0,0],[0,0],[{s},0]]}}"#));
    let out = locc(&["decompose", p(&c)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with(r#"{"sigmas":[8.1649658092772"#), "{}", stdout(&out));

    let bad = write(&dir, "bad.json", r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#);
    assert_eq!(code(&locc(&["decompose", p(&bad)])), 65);
}

#[test]
fn oracle_commands() {
    let dir = TempDir::new().unwrap();
    let out = locc(&["oracle", p(&emit(&dir, "comp2x2"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(r#""agree":true"#));

    let out = locc(&["oracle", p(&emit(&dir, "bennett9"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(r#""oracle":"indistinguishable""#));

    let out = locc(&["oracle", "--seed-sweep=100", "--dims=2,3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(r#""instances":100,"agree":100,"#));

    assert_eq!(code(&locc(&["oracle", p(&emit(&dir, "grid16"))])), 64);
}

#[test]
fn graph_chain_and_random() {
    let dir = TempDir::new().unwrap();
    let b = emit(&dir, "bennett9");
    let out = locc(&["graph", p(&b), "--party", "0", "--labels", "Ψ1,Ψ6,Ψ7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out).trim(),
        r#"{"party":0,"members":["Ψ1","Ψ6","Ψ7"],"adjacency":{"Ψ1":["Ψ6","Ψ7"],"Ψ6":["Ψ1"],"Ψ7":["Ψ1"]},"tol":1.0000000000000001e-9}"#
    );
    assert_eq!(code(&locc(&["graph", p(&b), "--party", "5"])), 65);

    assert!(stdout(&locc(&["chain", p(&b)])).contains(r#""criterion":true"#));
    assert!(stdout(&locc(&["chain", p(&emit(&dir, "comp2x2"))])).contains(r#""criterion":false"#));

    let r = dir.path().join("r.json");
    assert_eq!(code(&locc(&["random", "--dims", "2,2,2", "--seed", "3", "--depth", "4", "--out", p(&r)])), 0);
    assert_eq!(code(&locc(&["validate", p(&r)])), 0);
    let again = locc(&["random", "--dims", "2,2,2", "--seed", "3", "--depth", "4"]);
    assert_eq!(stdout(&again), fs::read_to_string(&r).unwrap());
}
