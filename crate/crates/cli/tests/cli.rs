use std::process::{Command, Output};

use serde_json::Value;

fn lempert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lempert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn membership_exit_codes() {
    let inside = lempert(&["membership", "tetrablock", "0,0,0"]);
    assert_eq!(inside.status.code(), Some(0));
    assert_eq!(json(&inside)["member"], Value::Bool(true));

    // On the boundary of L_3: a verified negative, not an error.
    let edge = lempert(&["membership", "lie 3", "1/2, −i/2, 0"]);
    assert_eq!(edge.status.code(), Some(1));
    let v = json(&edge);
    assert_eq!(v["member"], Value::Bool(false));
    assert!((v["gauge_or_witness"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    assert_eq!(lempert(&["membership", "tetrablock", "0,zz,0"]).status.code(), Some(2));
    assert_eq!(lempert(&["membership", "nowhere", "0"]).status.code(), Some(2));
    assert_eq!(lempert(&["membership", "bidisc", "0,0,0"]).status.code(), Some(2));
}

#[test]
fn verify_retraction_families() {
    let out = lempert(&["verify-retraction", "--family", "tetra_royal", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], Value::Bool(true));

    let obj = lempert(&[
        "verify-retraction",
        "--family",
        r#"{"family":"bidisc_rat","a":[0,1],"t":0.25}"#,
        "--samples",
        "500",
    ]);
    assert_eq!(obj.status.code(), Some(0));

    // |a| = 1 is required for R_{a,t}; n = 1 is not an even Lie ball.
    let bad_a = lempert(&["verify-retraction", "--family", r#"{"family":"bidisc_rat","a":[0.5,0],"t":0.5}"#]);
    assert_eq!(bad_a.status.code(), Some(2));
    let bad_n = lempert(&["verify-retraction", "--family", r#"{"family":"lie_even","n":1}"#]);
    assert_eq!(bad_n.status.code(), Some(2));
}

#[test]
fn lemma_suites() {
    let out = lempert(&["lemma-suite", "lemma41", "-p", "failing=20"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["consistent"], Value::Bool(true));

    let l3 = lempert(&["lemma-suite", "l3-obstruction", "-p", "grid=10"]);
    assert_eq!(l3.status.code(), Some(0));
    let v = json(&l3);
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-12);
    assert!(v["min_value"].as_f64().unwrap() > 0.0);

    let plane = lempert(&[
        "lemma-suite",
        "linret-classify",
        "-p",
        r#"plane={"u":"0,0,1","v":"1,0.5i,0"}"#,
        "-p",
        "budget=2000",
    ]);
    assert_eq!(plane.status.code(), Some(0), "{}", String::from_utf8_lossy(&plane.stderr));

    assert_eq!(lempert(&["lemma-suite", "remfzero"]).status.code(), Some(0));
    assert_eq!(lempert(&["lemma-suite", "lemma99"]).status.code(), Some(2));
}

#[test]
fn metric_bounds_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let out = lempert(&[
        "metric",
        "tetrablock",
        "0,0,0",
        "0.5, 0.2i, 0.1i",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let expected = 0.5f64.atanh();
    assert!((v["lower"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!((v["upper"].as_f64().unwrap() - expected).abs() < 1e-9);

    let mut rows = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["domain", "z", "w", "lower", "upper", "gap"]);
    assert_eq!(rows.records().count(), 1);

    let same = lempert(&["metric", "ball:2", "0.1,0.2", "0.1,0.2"]);
    assert_eq!(same.status.code(), Some(0));
    assert_eq!(json(&same)["upper"].as_f64(), Some(0.0));

    assert_eq!(lempert(&["metric", "disc", "0", "1.5"]).status.code(), Some(2));
}

#[test]
fn manifests_round_trip_and_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let report = dir.path().join("report.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"subcommand":"membership","parameters":{{"domain":"ball:2","point":[[0.3,0],[0,0.4]]}},"output":{:?}}}"#,
            report.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = lempert(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written["member"], Value::Bool(true));

    // Command-line values override the manifest.
    let over = lempert(&["membership", "--manifest", path.to_str().unwrap(), "-p", "point=0.9,0.9"]);
    assert_eq!(over.status.code(), Some(1));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written["member"], Value::Bool(false));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"subcommand":"membership","colour":"red"}"#).unwrap();
    assert_eq!(lempert(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lempert(&["frobnicate"]).status.code(), Some(2));
}
