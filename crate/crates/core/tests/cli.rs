use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn condcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condcov")).args(args).env_remove("CONDCOV_SEED").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = condcov(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("strict JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn k_invariant_defaults() {
    let v = json(&["k-invariant", "--family", "gaussian", "--subset", "0:0.2"]);
    assert!((v["k"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let v = json(&["k-invariant", "--family", "t", "--nu", "5", "--subset", "0:1"]);
    assert!((v["k"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let text = stdout(&condcov(&["k-invariant", "--family", "gaussian", "--subset", "0:0.2"]));
    assert!(text.contains("k      = 1.000000"), "{text}");
}

#[test]
fn k_invariant_simulation_matches_quadrature() {
    let quad = json(&["k-invariant", "--family", "t", "--nu", "3", "--subset", "0.045:0.955"]);
    let mc = json(&[
        "k-invariant",
        "--family",
        "t",
        "--nu",
        "3",
        "--subset",
        "0.045:0.955",
        "--method",
        "mc",
        "--draws",
        "1000000",
        "--seed",
        "7",
    ]);
    assert_eq!(mc["method"], "monte-carlo");
    let z = (quad["k"].as_f64().unwrap() - mc["k"].as_f64().unwrap()) / mc["errEstimate"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn cond_cov_formats() {
    let base = ["cond-cov", "--sigma", "1,0.5;0.5,1", "--a", "1,1", "--subset", "0.8:1"];
    let v = json(&base);
    let cov = &v["analytic"]["condCov"];
    assert!((cov[0][1].as_f64().unwrap() + 0.08601807844404386).abs() < 1e-9);
    assert!(v["mc"].is_null());

    let mut args = vec!["--format", "csv"];
    args.extend_from_slice(&base);
    let out = condcov(&args);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["quantity", "i", "j", "value"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.iter().any(|r| &r[0] == "condCov" && &r[1] == "1" && &r[2] == "1"));
}

#[test]
fn cond_cov_value_space_subset() {
    // Y = X1 + X2 has variance 3, so the value cut at 0 is the median
    let v = json(&["cond-cov", "--sigma", "1,0.5;0.5,1", "--a", "1,1", "--subset-values", "0:inf"]);
    let p = v["analytic"]["subset"][0][0].as_f64().unwrap();
    assert!((p - 0.5).abs() < 1e-12);
    let w = json(&["cond-cov", "--sigma", "1,0.5;0.5,1", "--a", "1,1", "--subset", "0.5:1"]);
    assert!((v["analytic"]["varY_B"].as_f64().unwrap() - w["analytic"]["varY_B"].as_f64().unwrap()).abs() < 1e-10);
}

#[test]
fn cond_cov_simulation_oracle() {
    let v = json(&[
        "cond-cov",
        "--sigma",
        "2,0.3,0;0.3,1,0.2;0,0.2,1",
        "--a",
        "1,-1,0.5",
        "--family",
        "t",
        "--nu",
        "6",
        "--subset",
        "0:0.25",
        "--oracle",
        "mc",
        "--draws",
        "400000",
        "--seed",
        "3",
    ]);
    let (exact, sim) = (&v["analytic"]["condCov"], &v["mc"]["condCov"]);
    let se = &v["mc"]["mc"]["condCovStderr"];
    for i in 0..3 {
        for j in 0..3 {
            let z = (exact[i][j].as_f64().unwrap() - sim[i][j].as_f64().unwrap()) / se[i][j].as_f64().unwrap();
            assert!(z.abs() < 4.5, "({i},{j}): z = {z}");
        }
    }
}

#[test]
fn partition_modes() {
    let v = json(&["partition", "--mode", "variance", "--k", "2"]);
    let levels: Vec<f64> = v["levels"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((levels[0] - 0.198).abs() < 1e-3 && (levels[0] + levels[1] - 1.0).abs() < 1e-9);
    let v = json(&["partition", "--mode", "kprime", "--cells", "3", "--family", "t", "--nu", "10"]);
    assert!((v["levels"][0].as_f64().unwrap() - 0.166).abs() < 1e-3);
    let text = stdout(&condcov(&["partition", "--emit", "table1"]));
    assert!(text.lines().count() >= 7, "{text}");
    let out = condcov(&["--format", "csv", "partition", "--emit", "table1"]);
    let rows = csv::Reader::from_reader(out.stdout.as_slice()).records().count();
    assert!(rows >= 6);
}

#[test]
fn sample_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(
        &model,
        r#"{"schema": 1, "mu": [0, 1], "sigma": [[1, 0.2], [0.2, 2]], "family": {"name": "t", "nu": 5}}"#,
    )
    .unwrap();
    let model = model.to_str().unwrap();
    let out = condcov(&["sample", "--model", model, "--count", "3", "--seed", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4, "{text}");

    let file = dir.path().join("s.csv");
    let out = condcov(&["sample", "--model", model, "--count", "3", "--seed", "4", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&file).unwrap(), text);
}

#[test]
fn seed_determines_output() {
    let args = ["sample", "--sigma", "1,0;0,1", "--count", "50"];
    let run = |seed: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_condcov"));
        cmd.args(args).env_remove("CONDCOV_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("CONDCOV_SEED", e);
        }
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("5"), None), run(Some("5"), None));
    assert_ne!(run(Some("5"), None), run(Some("6"), None));
    assert_eq!(run(None, None), run(Some("42"), None));
    assert_eq!(run(None, Some("5")), run(Some("5"), None));
}

#[test]
fn sample_pipes_into_check_normality() {
    let sampled = condcov(&["sample", "--sigma", "1,0.5;0.5,1", "--count", "20000", "--seed", "8"]);
    assert!(sampled.status.success());
    let mut child = Command::new(env!("CARGO_BIN_EXE_condcov"))
        .args(["--format", "json", "check-normality", "--data", "-", "--a", "1,1", "--bootstrap", "200", "--seed", "1"])
        .env_remove("CONDCOV_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&sampled.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let counts: u64 = v["cellCounts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 20000);
    let q99 = v["bootstrapQuantiles"].as_array().unwrap().iter().find(|q| q[0] == 0.99).unwrap()[1].as_f64().unwrap();
    assert!(v["statistic"].as_f64().unwrap() < q99);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["sample", "--sigma", "1", "--count", "0"][..],
        &["k-invariant", "--family", "weibull", "--subset", "0:1"],
        &["k-invariant", "--family", "gaussian", "--subset", "0.5:0.2"],
        &["partition"],
        &["frobnicate"],
    ] {
        assert_eq!(condcov(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    let mut rows = String::from("x,y\n");
    for i in 0..200 {
        rows.push_str(&format!("{},{}\n", i, i % 7));
    }
    rows.insert_str(rows.find("\n3,").unwrap() + 1, "1,oops\n");
    std::fs::write(&data, rows).unwrap();
    let out = condcov(&["check-normality", "--data", data.to_str().unwrap(), "--a", "1,1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("line 5"), "{err}");

    let out = condcov(&["k-invariant", "--family", "t", "--nu", "1.5", "--subset", "0:1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = condcov(&["cond-cov", "--sigma", "1,2;2,1", "--a", "1,1", "--subset", "0:0.5"]);
    assert_eq!(out.status.code(), Some(1), "indefinite sigma");
    let out = condcov(&["sample", "--model", "/nonexistent.json", "--count", "2"]);
    assert_eq!(out.status.code(), Some(1));
}
