use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn afield(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afield"))
        .current_dir(dir)
        .env("AFIELD_THREADS", "2")
        .args(args)
        .output()
        .expect("run afield")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn oscillator_solve() {
    let dir = tempfile::tempdir().unwrap();
    let s = json(&afield(dir.path(), &["solve", "--beta", "0", "--trap", "harmonic", "--grid", "256", "--box", "8"]));
    let total = s["breakdown"]["total"].as_f64().unwrap();
    assert!((total - 2.0).abs() < 1e-3, "{total}");
    assert_eq!(s["status"], "converged");
    assert_eq!(s["version"], "afield 0.1.0");
    assert_eq!(s["config"]["grid"]["n"], 256);
    assert!(dir.path().join("state.afgs").exists());
    let len = std::fs::metadata(dir.path().join("state.afgs")).unwrap().len();
    assert_eq!(len, 40 + 16 * 256 * 256);
}

#[test]
fn warm_restart_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let first = json(&afield(
        dir.path(),
        &["solve", "--beta", "1", "--R", "0.1", "--grid", "64", "--box", "6", "--state", "u.afgs", "--history", "h.csv"],
    ));
    assert!(first["iterations"].as_u64().unwrap() > 0);
    let history = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(history.starts_with("iteration,energy\n0,"));
    let second = json(&afield(
        dir.path(),
        &["solve", "--beta", "1", "--R", "0.1", "--init", "from_file", "--init-file", "u.afgs", "--state", "v.afgs"],
    ));
    assert_eq!(second["iterations"], 0);
    assert_eq!(second["config"]["grid"]["half_width"], 6.0);
    let (a, b) = (first["breakdown"]["total"].as_f64().unwrap(), second["breakdown"]["total"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-12);

    let out = afield(dir.path(), &["solve", "--grid", "32", "--box", "6", "--init", "from_file", "--init-file", "u.afgs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lives on n=64"));
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = afield(dir.path(), &["solve", "--grid", "100", "--box", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("power of two"));
    assert_eq!(afield(dir.path(), &["solve", "--grid", "64"]).status.code(), Some(1));
    assert_eq!(afield(dir.path(), &["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(afield(dir.path(), &["solve", "--grid", "64", "--box", "6", "--tol-grad", "-1"]).status.code(), Some(1));
    let out = afield(dir.path(), &["sweep", "--axis", "beta", "--values", "--grid", "32", "--box", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(afield(dir.path(), &["sweep", "--axis", "q", "--values", "1", "--grid", "32", "--box", "6"]).status.code(), Some(1));
    assert_eq!(afield(dir.path(), &["verify", "nonsense"]).status.code(), Some(1));
    assert!(afield(dir.path(), &["--help"]).status.success());
}

#[test]
fn sweep_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = afield(
        dir.path(),
        &["sweep", "--axis", "beta", "--values", "0.4,0.2", "--grid", "32", "--box", "6", "--out", "t.csv", "--summary", "t.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "axis_value,total,kinetic,mixed,quartic,potential,converged,grad_norm,iterations");
    assert_eq!(lines.len(), 3);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "0.4");
    assert_eq!(row[6], "true");
    let total: f64 = row[1].parse().unwrap();
    let parts: f64 = row[2..6].iter().map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((total - parts).abs() < 1e-12);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(summary["axis"], "beta");
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn energy_of_saved_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    json(&afield(dir.path(), &["solve", "--beta", "1", "--R", "0.1", "--grid", "64", "--box", "6", "--state", "u.afgs"]));
    let e = json(&afield(dir.path(), &["energy", "u.afgs", "--particles", "1000"]));
    let gap = e["gap"].as_f64().unwrap();
    assert!(gap > 0.0 && gap < 1e-2, "{gap}");
    let per = e["breakdown"]["per_particle_total"].as_f64().unwrap();
    let f = e["functional"]["total"].as_f64().unwrap();
    assert!((per - f - gap).abs() < 1e-12);
    assert_eq!(e["params"]["radius"], 0.1);

    let two = json(&afield(dir.path(), &["energy", "u.afgs", "--particles", "2"]));
    assert_eq!(two["breakdown"]["three_body"], 0.0);

    let out = afield(dir.path(), &["energy", "u.afgs", "--particles", "10", "--R", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("divergent"));

    let mut bytes = std::fs::read(dir.path().join("u.afgs")).unwrap();
    bytes[..4].copy_from_slice(b"AFGX");
    std::fs::write(dir.path().join("bad.afgs"), &bytes).unwrap();
    let out = afield(dir.path(), &["energy", "bad.afgs", "--particles", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("format error"));
}

#[test]
fn verify_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "kernels", "--samples", "2000", "--seed", "42"];
    let a = afield(dir.path(), &args);
    let b = afield(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    std::fs::write(dir.path().join("k.json"), &a.stdout).unwrap();
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["report"]["passed"], true);
    let check = report["report"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "sup_grad_bound")
        .unwrap()
        .clone();

    let r = json(&afield(dir.path(), &["verify", "--replay", "k.json", "--check", "sup_grad_bound"]));
    assert_eq!(r["case"], check["worst"]);
    assert_eq!(r["outcome"]["scaled_grad"], check["measured"]);

    std::fs::write(dir.path().join("case.json"), serde_json::to_vec(&check["worst"]).unwrap()).unwrap();
    let r2 = json(&afield(dir.path(), &["verify", "--replay", "case.json"]));
    assert_eq!(r2["outcome"], r["outcome"]);
    assert_eq!(afield(dir.path(), &["verify", "--replay", "k.json"]).status.code(), Some(1));
}

#[test]
fn verify_geometry_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = afield(dir.path(), &["verify", "geometry", "--samples", "5000", "--seed", "42", "--out", "g.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["passed"], true);
    assert_eq!(report["report"]["regimes"].as_array().unwrap().len(), 4);
}
