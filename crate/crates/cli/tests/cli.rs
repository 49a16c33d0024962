use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qca"))
        .args(args)
        .output()
        .expect("running qca")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn spectrum_lists_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qca(&["spectrum", "--dimension", "2", "--n", "4", "--out", out]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let (header, rows) = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(header[0], "ell_x");
    assert_eq!(rows.len(), 16);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["lattice"]["N"], 4);
}

#[test]
fn dispersion_writes_tables_and_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qca(&["dispersion", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.path().join("dispersion.csv"));
    assert_eq!(header, ["k", "phi_over_dt", "E_rel", "abs_err", "rel_err"]);
    assert_eq!(rows.len(), 8);
    let (header, rows) = csv_rows(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["scale", "rel_err", "deviation"]);
    assert_eq!(rows.len(), 4);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("convergence.json")).unwrap()).unwrap();
    assert_eq!(report["dispersion_second_order"], true);
    let p = report["study"]["generator"]["order"].as_f64().unwrap();
    assert!((p - 2.0).abs() < 0.1, "{p}");
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(&cfg, r#"{"lattice": {"N": 4, "theta": 0.2}}"#).unwrap();
    let o = qca(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 5);
    let o = qca(&["spectrum", "--config", cfg.to_str().unwrap(), "--n", "6"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 7);
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(qca(&["spectrum", "--n", "3"]).status.code(), Some(2));
    assert_eq!(
        qca(&["verify", "--only", "no-such-check"]).status.code(),
        Some(2)
    );
    assert_eq!(qca(&["verify", "--tol", "-1"]).status.code(), Some(2));
    // 16 sites of one type is 2^32 amplitudes, far past the cap.
    assert_eq!(qca(&["evolve", "--n", "16"]).status.code(), Some(2));
}

#[test]
fn verify_only_reports_one_record() {
    let o = qca(&["verify", "--only", "car"]);
    assert_eq!(o.status.code(), Some(0));
    let records: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = records.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    assert_eq!(arr[0]["check"], "car");
    assert_eq!(arr[0]["pass"], true);
}

#[test]
fn evolve_snapshot_and_conservation() {
    let o = qca(&["evolve", "--n", "6", "--theta", "0.4", "--steps", "0"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    let o = qca(&["evolve", "--n", "6", "--theta", "0.4", "--steps", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for step in 0..=3 {
        let total: f64 = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|f| f[0] == step.to_string())
            .map(|f| f[3].parse::<f64>().unwrap() + f[4].parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "step {step}: {total}");
    }
}

#[test]
fn walk_evolution_of_two_fermions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("walk.json");
    fs::write(
        &cfg,
        r#"{"lattice": {"N": 4, "theta": 0.3},
            "evolve": {"system": "walk", "particles": [{"x": 0, "coin": "R"}, {"x": 1, "coin": "L"}]}}"#,
    )
    .unwrap();
    let o = qca(&["evolve", "--config", cfg.to_str().unwrap(), "--steps", "2"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8(o.stdout).unwrap();
    // Each antisymmetrized factor carries one particle's worth of probability.
    let per_factor: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] == "2" && f[2] == "0")
        .map(|f| f[3].parse::<f64>().unwrap() + f[4].parse::<f64>().unwrap())
        .sum();
    assert!((per_factor - 1.0).abs() < 1e-12);
}

#[test]
fn qca_demo_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qca(&["qca-demo", "--out", out, "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("qca_demo.json")).unwrap()).unwrap();
    assert_eq!(summary["isomorphism"]["max_residual"], 0.0);
    assert_eq!(summary["locality"]["shift_hop"], 1);
    let (header, rows) = csv_rows(&dir.path().join("qca_demo.csv"));
    assert_eq!(header, ["step", "site", "type", "n_R", "n_L"]);
    assert_eq!(rows.len(), 5 * 3 * 2);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
}
