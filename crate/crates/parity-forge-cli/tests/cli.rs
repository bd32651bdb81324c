use parity_forge::noisemodel::{p_dist, p_eff, NoiseParams, Regime};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parity-forge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV with `#` header lines, keyed by column name.
fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

#[test]
fn layout_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("layout.json");
    let svg = dir.path().join("layout.svg");
    let out = run(&["layout", "--m", "4", "--out", path(&file), "--svg", path(&svg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    let out = run(&["verify", "--layout", path(&file), "--all"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn verify_reads_stdin() {
    let layout = run(&["layout", "--m", "4"]);
    assert!(layout.status.success());
    let mut child = bin()
        .args(["verify", "--all"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&layout.stdout).unwrap();
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(0));
}

#[test]
fn tampered_layout_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("layout.json");
    assert!(run(&["layout", "--m", "4", "--out", path(&file)]).status.success());
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    // demote a boundary stabilizer so it no longer counts as a logical check
    let stabs = v["stabilizers"].as_array_mut().unwrap();
    let i = stabs.iter().position(|s| s["kind"] == "boundary-logical").unwrap();
    stabs[i]["kind"] = "boundary-composite-part".into();
    std::fs::write(&file, v.to_string()).unwrap();
    let out = run(&["verify", "--layout", path(&file), "--independence", "--labels"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(run(&["layout", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["reproduce", "fig99"]).status.code(), Some(2));
    assert_eq!(run(&["analytics", "--regime", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--layout", "/nonexistent/layout.json"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--shots", "1.5"]).status.code(), Some(2));
}

#[test]
fn analytics_match_closed_forms() {
    let out = run(&[
        "analytics",
        "--k-range",
        "2:6",
        "--p",
        "1e-3",
        "--eta",
        "1e5",
        "--rounds",
        "10",
        "--regime",
        "scaled",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with('#'));
    let params = NoiseParams::new(1e-3, 1e5, 10, Regime::Scaled).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    for row in rows {
        let k: u32 = row["k"].parse().unwrap();
        assert_eq!(row["p_eff"].parse::<f64>().unwrap(), p_eff(k, &params).unwrap());
        assert_eq!(row["p_dist"].parse::<f64>().unwrap(), p_dist(k, &params).unwrap());
    }
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 2e-3\n[analytics]\nrounds = 20\n").unwrap();
    let rows = |args: &[&str]| csv_rows(&String::from_utf8(run(args).stdout).unwrap());
    let base = ["--config", path(&cfg), "analytics", "--k-range", "2:2"];
    let from_file = rows(&base);
    let expect = p_eff(2, &NoiseParams::new(2e-3, 1e5, 20, Regime::Scaled).unwrap()).unwrap();
    assert_eq!(from_file[0]["p_eff"].parse::<f64>().unwrap(), expect);
    let mut with_flag = base.to_vec();
    with_flag.extend(["--p", "1e-3"]);
    let expect = p_eff(2, &NoiseParams::new(1e-3, 1e5, 20, Regime::Scaled).unwrap()).unwrap();
    assert_eq!(rows(&with_flag)[0]["p_eff"].parse::<f64>().unwrap(), expect);
}

#[test]
fn noiseless_simulation() {
    let out = run(&[
        "simulate", "--k", "2", "--p", "0", "--eta", "inf", "--rounds", "4", "--shots", "2000", "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p_accept"], 1.0);
    assert_eq!(v["p_logical"], 0.0);
    assert_eq!(v["shots"], 2000);
    assert_eq!(v["parameters"]["seed"], 1);
}

#[test]
fn synth_rows_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let fits = dir.path().join("fits.json");
    let out = run(&[
        "synth",
        "--target",
        "haar",
        "--count",
        "3",
        "--gateset",
        "C3",
        "--budget",
        "8",
        "--budget-min",
        "2",
        "--samples",
        "50",
        "--r-trunc",
        "4",
        "--fits",
        path(&fits),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 3 * 4);
    for r in &rows {
        let cost = r["N_T"].parse::<f64>().unwrap() + 2.5 * r["N_sqrtT"].parse::<f64>().unwrap();
        assert!(cost <= r["R"].parse::<f64>().unwrap());
        assert!(r.contains_key("target_id") && r.contains_key("epsilon"));
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&fits).unwrap()).unwrap();
    assert!(v["C3"]["cost_slope"].is_number());

    let out = run(&[
        "synth",
        "--target",
        "rz:0.1234",
        "--gateset",
        "C2",
        "--budget",
        "4",
        "--backend",
        "exhaustive",
        "--r-trunc",
        "4",
    ]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&String::from_utf8(out.stdout).unwrap()).len(), 1);
}

#[test]
fn reproduce_fig7_reports_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "fig7", "--out-dir", path(dir.path())]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("fig7.csv")).unwrap();
    assert!(text.contains("# crossing_after_k = 6"), "{text}");
    assert_eq!(csv_rows(&text).len(), 8);
    let out = run(&["reproduce", "fig9", "--out-dir", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
