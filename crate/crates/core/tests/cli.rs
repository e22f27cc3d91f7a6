use std::f64::consts::TAU;
use std::io::Write;
use std::process::{Command, Output, Stdio};

use num_complex::Complex64;
use rfh_core::hormander::{build_block, BlockKind};
use serde_json::{json, Value};

fn rfh(args: &[&str], doc: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rfh"))
        .args(args)
        .env_remove("RFH_TOLERANCES")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(doc.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn rfh_json(args: &[&str], doc: &str) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = rfh(&full, doc);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn doc(value: Value) -> String {
    value.to_string()
}

fn example() -> String {
    doc(json!({"n": 3, "k": 1, "a0": {"frequencies": [1.0]},
               "a1": {"blocks": [{"kind": "a", "m": 1, "re": 1.0}, {"kind": "a", "m": 1, "re": 1.7}]}}))
}

#[test]
fn rfh_example_degrees() {
    let v = rfh_json(&["rfh"], &example());
    assert_eq!(v["report"]["rfh"]["dims"], json!({"-2": 1, "-1": 1}));
    let text = String::from_utf8(rfh(&["rfh"], &example()).stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("RFH(H)") && l.ends_with("Z2[-2] + Z2[-1]")), "{text}");
}

#[test]
fn check_reports_unmet_conditions_with_success() {
    let d = doc(json!({"n": 3, "k": 1, "a0": {"frequencies": [1.0]},
                       "a1": {"blocks": [{"kind": "a", "m": 2, "re": 0.5}]}}));
    let out = rfh(&["check"], &d);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("sufficient conditions not met"));
    let v = rfh_json(&["check"], &d);
    assert_eq!(v["tentacular"]["verdict"], "sufficient_not_met");
    assert_eq!(v["tentacular"]["trace"][0]["case"], "ii");
}

#[test]
fn orbits_example_rows() {
    let v = rfh_json(&["orbits", "--lo", "-7", "--hi", "7"], &example());
    let mut etas: Vec<f64> = v["families"].as_array().unwrap().iter().map(|f| f["eta"].as_f64().unwrap()).collect();
    etas.dedup();
    assert_eq!(etas, vec![-TAU, 0.0, TAU]);
}

#[test]
fn json_round_trip_is_exact() {
    let first = rfh_json(&["census"], &example());
    let again = rfh_json(&["census"], &doc(first["input"].clone()));
    let (a, b) = (first["generators"].as_array().unwrap(), again["generators"].as_array().unwrap());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        for key in ["grading", "sigma_index", "cz_transverse", "m", "side", "pole"] {
            assert_eq!(x[key], y[key]);
        }
        let (ex, ey) = (x["action"].as_f64().unwrap(), y["action"].as_f64().unwrap());
        assert!((ex - ey).abs() <= 1e-12 * ex.abs().max(1.0));
    }
    let r1 = rfh_json(&["rfh"], &example());
    let r2 = rfh_json(&["rfh"], &doc(r1["input"].clone()));
    assert_eq!(r1["report"], r2["report"]);
}

#[test]
fn classified_blocks_feed_back_as_input() {
    let d = doc(json!({"n": 4, "k": 1, "a0": {"frequencies": [1.3]},
                       "a1": {"matrix": [[0.0, 0.0, 0.0, 2.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 2.0, 0.0],
                                         [0.0, 0.0, 0.0, 0.0, 0.0, 0.9], [2.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                                         [0.0, 2.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.9, 0.0, 0.0, 0.0]]}}));
    let checked = rfh_json(&["check"], &d);
    let blocks = checked["a1_blocks"].clone();
    assert_eq!(blocks.as_array().unwrap().len(), 2);
    let refed = doc(json!({"n": 4, "k": 1, "a0": {"frequencies": [1.3]}, "a1": {"blocks": blocks}}));
    let a = rfh_json(&["census", "--lo", "-12", "--hi", "12"], &d);
    let b = rfh_json(&["census", "--lo", "-12", "--hi", "12"], &refed);
    let grades = |v: &Value| v["generators"].as_array().unwrap().iter().map(|g| g["grading"].clone()).collect::<Vec<_>>();
    assert_eq!(grades(&a), grades(&b));
}

#[test]
fn human_and_json_agree_on_indices() {
    let v = rfh_json(&["census"], &example());
    let text = String::from_utf8(rfh(&["census"], &example()).stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split_whitespace().collect()).collect();
    let gens = v["generators"].as_array().unwrap();
    assert_eq!(rows.len(), gens.len());
    for (row, g) in rows.iter().zip(gens) {
        assert_eq!(row[0], g["side"].as_str().unwrap());
        assert_eq!(row[2], g["pole"].as_str().unwrap());
        assert_eq!(row[5].parse::<i64>().unwrap(), g["grading"].as_i64().unwrap());
        assert_eq!(row[4].parse::<i64>().unwrap(), g["cz_transverse"].as_i64().unwrap());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(rfh(&["rfh"], "{not json").status.code(), Some(1));
    let bad_dims = doc(json!({"n": 4, "k": 1, "a0": {"frequencies": [1.0]}, "a1": {"blocks": [{"kind": "a", "m": 1, "re": 1.0}]}}));
    let out = rfh(&["rfh"], &bad_dims);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let not_hyperbolic = doc(json!({"n": 2, "k": 1, "a0": {"frequencies": [1.0]},
                                    "a1": {"blocks": [{"kind": "c", "m": 1, "re": 0.0, "im": 2.0, "gamma": 1}]}}));
    assert_eq!(rfh(&["rfh"], &not_hyperbolic).status.code(), Some(1));
    assert_eq!(rfh(&["check"], &not_hyperbolic).status.code(), Some(0));

    // a Krein sign on a nontrivial Jordan block is not determined
    let c2 = build_block(BlockKind::C, 2, Complex64::new(0.0, 1.5), Some(1)).unwrap();
    let d = doc(json!({"n": 3, "k": 1, "a0": {"frequencies": [1.0]}, "a1": {"matrix": c2.matrix.rows()}}));
    assert_eq!(rfh(&["classify"], &d).status.code(), Some(2));

    let mut child = Command::new(env!("CARGO_BIN_EXE_rfh"))
        .args(["rfh"])
        .env("RFH_TOLERANCES", "rank_cut=-1")
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(example().as_bytes()).unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(1));
}

#[test]
fn document_tolerances_are_honoured() {
    let mut v: Value = serde_json::from_str(&example()).unwrap();
    v["tolerances"] = json!({"rank_cut": -1.0});
    assert_eq!(rfh(&["rfh"], &v.to_string()).status.code(), Some(1));
    v["tolerances"] = json!({"crossing": 1e-9});
    assert_eq!(rfh(&["rfh"], &v.to_string()).status.code(), Some(0));
}
