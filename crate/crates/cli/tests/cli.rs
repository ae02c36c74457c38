use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_berry-holonomy"))
        .args(args)
        .env_remove("BERRY_HOLONOMY_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn connection_envelope_and_entry() {
    let out = bin(&["connection", "--m", "3", "--lambda", "0", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["metadata"]["command"], "connection");
    let a = doc["payload"]["points"][0]["A_mu"][2][0][0].as_f64().unwrap();
    assert!((a - 0.99468).abs() < 1e-4);
}

#[test]
fn negative_complex_flags() {
    let out = bin(&[
        "connection",
        "--m",
        "2",
        "--lambda",
        "-0.5-0.25i",
        "--mu",
        "-i",
        "--payload-only",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let p = &json_of(&out)["points"][0]["point"];
    assert_eq!(p["lambda"], serde_json::json!([-0.5, -0.25]));
    assert_eq!(p["mu"], serde_json::json!([0.0, -1.0]));
}

#[test]
fn csv_grid_from_text_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    std::fs::write(&grid, "# lambda mu\n0 0\n0.5 0.25+0.25i\n").unwrap();
    let csv_path = dir.path().join("a.csv");
    let out = bin(&[
        "curvature",
        "--m",
        "2",
        "--grid",
        grid.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("lambda.re,lambda.im,mu.re,mu.im,C_lambda_mu[0][0].re"));
    assert_eq!(lines[0].split(',').count(), 4 + 6 * 8);
}

#[test]
fn json_grid_and_numeric_source() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"[{"lambda":[0.25,0.0],"mu":[0.5,0.0]}]"#).unwrap();
    let out = bin(&[
        "connection",
        "--m",
        "2",
        "--grid",
        grid.to_str().unwrap(),
        "--source",
        "numeric",
        "--dim",
        "64",
        "--payload-only",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let entry = &json_of(&out)["points"][0];
    assert_eq!(entry["D"], 64);
    assert!(entry["h"].as_f64().unwrap() == 1e-4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "m = 4\nlambda = 0.1\nmu = 0.2\n").unwrap();
    let out = bin(&[
        "connection",
        "--config",
        cfg.to_str().unwrap(),
        "--m",
        "2",
        "--payload-only",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["config"]["m"], 2);
    assert_eq!(doc["points"][0]["A_mu"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_inputs_exit_2() {
    for args in [
        vec!["connection", "--m", "0"],
        vec!["connection", "--mu", "1+2j"],
        vec!["connection", "--grid", "/nonexistent/grid.txt"],
        vec!["holonomy", "--format", "csv"],
        vec!["verify", "--tolerance", "nonsense=1"],
        vec!["frobnicate"],
    ] {
        let out = bin(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        bin(&["chern", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn invalid_thread_env_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_berry-holonomy"))
        .args(["chern", "--lambda", "0"])
        .env("BERRY_HOLONOMY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn closure_budget_exhaustion_exits_3() {
    let out = bin(&["irreducibility", "--m", "2", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_breach_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = bin(&[
        "verify",
        "--m",
        "2",
        "--lambda",
        "0.5",
        "--mu",
        "0.5",
        "--dim",
        "64",
        "--tolerance",
        "connection=1e-15",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["payload"]["pass"], false);
    let sections = doc["payload"]["sections"].as_array().unwrap();
    assert_eq!(sections[0]["name"], "connection");
    assert_eq!(sections[0]["pass"], false);
    assert!(sections[1..].iter().all(|s| s["pass"] == true));
}

#[test]
fn holonomy_from_loop_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loop.json");
    let corners = [[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];
    let segments: Vec<Value> = (0..4)
        .map(|k| {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            serde_json::json!({
                "kind": "line",
                "from": {"lambda": [a[0], a[1]], "mu": [0.1, 0.0]},
                "to": {"lambda": [b[0], b[1]], "mu": [0.1, 0.0]},
            })
        })
        .collect();
    std::fs::write(&path, serde_json::to_string(&segments).unwrap()).unwrap();
    let out = bin(&[
        "holonomy",
        "--m",
        "2",
        "--loop",
        path.to_str().unwrap(),
        "--samples",
        "1024",
        "--payload-only",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert!(doc["unitarity_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(doc["w"].as_array().unwrap().len(), 2);
    assert!((doc["path_length"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn open_loop_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.json");
    std::fs::write(
        &path,
        r#"[{"kind":"line","from":{"lambda":[0,0],"mu":[0,0]},"to":{"lambda":[1,0],"mu":[0,0]}}]"#,
    )
    .unwrap();
    assert_eq!(
        bin(&["holonomy", "--loop", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn payloads_are_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_berry-holonomy"))
            .args([
                "curvature",
                "--m",
                "3",
                "--source",
                "numeric",
                "--dim",
                "48",
                "--payload-only",
            ])
            .env("BERRY_HOLONOMY_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}

#[test]
fn help_exits_0() {
    let out = bin(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(Path::new(env!("CARGO_BIN_EXE_berry-holonomy")).exists());
}
