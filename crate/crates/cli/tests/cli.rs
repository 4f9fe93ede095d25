use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prismlab"))
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prismlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const QSQRT3: &str = r#"{"p":3,"E":[-3,0,1]}"#;

#[test]
fn twist_cohomology_pipeline() {
    let f = scratch("f.json", QSQRT3);
    let twist = run(&["examples", "bk-twist", "--n", "-1", "--m", "3", "--field", f.to_str().unwrap()], "");
    assert!(twist.status.success());
    let coh = run(&["conn", "cohomology"], &stdout(&twist));
    assert_eq!(coh.status.code(), Some(0));
    assert_eq!(stdout(&coh).trim(), r#"{"h0":1,"h1":1}"#);
}

#[test]
fn strat_then_cocycle_passes_and_perturbation_fails() {
    let conn = stdout(&run(&["examples", "bk-twist", "--n", "2", "--m", "2", "--l", "2"], ""));
    let strat = run(&["conn", "strat", "--D", "6"], &conn);
    assert!(strat.status.success());
    let check = run(&["strat", "check-cocycle"], &stdout(&strat));
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(stdout(&check).trim(), r#"{"status":"pass"}"#);

    let mut v = json_out(&strat);
    v["phi"][2][0][1] = json!("5/1");
    let check = run(&["strat", "check-cocycle"], &v.to_string());
    assert_eq!(check.status.code(), Some(1));
    let report = json_out(&check);
    assert_eq!(report["status"], "fail");
    assert!(report["witness"]["monomial"]["k"].is_array());

    let back = run(&["strat", "to-conn"], &stdout(&strat));
    assert_eq!(json_out(&back), serde_json::from_str::<Value>(&conn).unwrap());
}

#[test]
fn classify_pi_over_three() {
    let f = scratch("f3.json", QSQRT3);
    let conn = run(
        &["conn", "new", "--field", f.to_str().unwrap(), "--m", "1", "--residual", r#"[[["0","1/3"]]]"#],
        "",
    );
    let path = scratch("pi3.json", &stdout(&conn));
    let out = run(&["conn", "classify", path.to_str().unwrap()], "");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), r#"{"log_nearly_dR":true,"nearly_dR":false}"#);
}

#[test]
fn nilpotency_and_convergence_exit_codes() {
    let third = stdout(&run(&["conn", "new", "--m", "1", "--residual", r#"[["1/3"]]"#], ""));
    let nil = run(&["conn", "nilpotent"], &third);
    assert_eq!(nil.status.code(), Some(1));
    assert_eq!(json_out(&nil)["status"], "ProvenNotNilpotent");

    let conv = run(&["conn", "converges", "--v0", "1/2", "--D", "3"], &third);
    assert_eq!(conv.status.code(), Some(1));
    assert_eq!(
        stdout(&conv).trim(),
        r#"{"effective_v0":"1/2","status":"Divergent","trace":["0/1","-1/2","-1/1","-5/2"]}"#
    );

    let twist = stdout(&run(&["examples", "bk-twist", "--n", "-2", "--m", "2"], ""));
    let kernel = run(&["conn", "galois-kernel", "--D", "4"], &twist);
    let conv = run(&["conn", "converges", "--v0", "1/2"], &stdout(&kernel));
    assert_eq!(conv.status.code(), Some(0));
    assert_eq!(json_out(&conv)["status"], "Convergent");
}

#[test]
fn output_is_deterministic() {
    let conn = stdout(&run(&["examples", "bk-twist", "--n", "3", "--m", "3", "--l", "2"], ""));
    let a = run(&["conn", "strat", "--D", "5", "--scalar", "log"], &conn);
    let b = run(&["conn", "strat", "--D", "5", "--scalar", "log"], &conn);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_errors_exit_two() {
    let bad = run(&["field", "check"], r#"{"p":3,"E":[-9,0,1]}"#);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Eisenstein"));

    let ok = run(&["field", "check"], QSQRT3);
    assert_eq!(ok.status.code(), Some(0));

    let syntax = run(&["conn", "cohomology"], "{\"field\": 1,\n oops}");
    assert_eq!(syntax.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("line 2"));

    let mut conn: Value =
        serde_json::from_str(&stdout(&run(&["examples", "bk-twist", "--n", "1", "--m", "2"], ""))).unwrap();
    conn["N"][0][0]["coeffs"][1] = json!("x/2");
    let out = run(&["conn", "cohomology"], &conn.to_string());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("$.N[0][0].coeffs[1]"));

    assert_eq!(run(&["conn", "frobnicate"], "").status.code(), Some(2));
}

#[test]
fn sessions_select_by_name_and_reject_duplicates() {
    let mut conn: Value =
        serde_json::from_str(&stdout(&run(&["examples", "bk-twist", "--n", "-1", "--m", "2"], ""))).unwrap();
    let field = conn.as_object_mut().unwrap().remove("field").unwrap();
    let mut a = conn.clone();
    a["name"] = json!("a");
    let mut b = conn;
    b["name"] = json!("b");
    b["N"][0][0]["coeffs"][0] = json!(["5/1"]);

    let session = json!({ "field": field, "config": { "D": 4 }, "connections": [a.clone(), b] });
    let out = run(&["conn", "cohomology", "--name", "b"], &session.to_string());
    assert_eq!(stdout(&out).trim(), r#"{"h0":0,"h1":0}"#);
    let out = run(&["conn", "cohomology", "--name", "a"], &session.to_string());
    assert_eq!(stdout(&out).trim(), r#"{"h0":1,"h1":1}"#);
    let strat = run(&["conn", "strat", "--name", "a"], &session.to_string());
    assert_eq!(json_out(&strat)["D"], 4);

    let dup = json!({ "field": field, "connections": [a.clone(), a] });
    let out = run(&["conn", "cohomology", "--name", "a"], &dup.to_string());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"));
}

#[test]
fn algebra_commands_compose() {
    let f = scratch("fa.json", QSQRT3);
    let fs = f.to_str().unwrap();
    let one = stdout(&run(&["examples", "bk-twist", "--n", "1", "--m", "2", "--field", fs], ""));
    let p1 = scratch("one.json", &one);
    let dual = run(&["conn", "dual", p1.to_str().unwrap()], "");
    let p2 = scratch("dual.json", &stdout(&dual));
    let prod = run(&["conn", "tensor", p1.to_str().unwrap(), p2.to_str().unwrap()], "");
    let trivial = stdout(&run(&["examples", "bk-twist", "--n", "0", "--m", "2", "--field", fs], ""));
    assert_eq!(json_out(&prod), serde_json::from_str::<Value>(&trivial).unwrap());

    let twisted = run(&["conn", "twist", "--n", "-1"], &one);
    assert_eq!(json_out(&twisted), serde_json::from_str::<Value>(&trivial).unwrap());

    let moved = run(&["conn", "change-unif", "--lambda", "1"], &one);
    assert!(moved.status.success());
    assert_eq!(stdout(&run(&["conn", "cohomology"], &stdout(&moved))).trim(), r#"{"h0":0,"h1":0}"#);

    let strat = stdout(&run(&["conn", "strat", "--D", "5"], &one));
    let key = run(&["verify", "key-lemma", "--n-max", "2"], &strat);
    assert_eq!(key.status.code(), Some(0));
}
