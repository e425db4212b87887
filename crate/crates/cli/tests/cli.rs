use std::fs;
use std::path::Path;
use std::process::Command;

use blockade_cli::config::Selector;
use blockade_cli::{parse_config, parse_scenarios, presets, run_all, verify_manifest};
use serde_json::Value;

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn run_preset(name: &str, out: &Path) {
    run_all(&presets::preset(name).unwrap(), out).unwrap();
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blockade"))
}

#[test]
fn minimal_config_is_valid() {
    let r = parse_config(
        r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "γ": 0.3333, "n̄": 0.01, "cutoffs": [6, 6]}"#,
    )
    .unwrap();
    assert_eq!(r.selector, Selector::Model1);
    assert_eq!(r.gamma, [0.3333, 0.3333]);
    assert_eq!(r.n_th, [0.01, 0.01]);
    assert_eq!(r.config.time.points, 2001);
    assert_eq!(r.config.units.as_deref(), Some("J"));
}

#[test]
fn negative_cutoff_names_the_field() {
    let e = parse_config(r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "cutoffs": [6, -1]}"#).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().starts_with("cutoffs[1]"), "{e}");
}

#[test]
fn missing_selector_lists_the_choices() {
    let e = parse_config(r#"{"K": 10, "F": 1, "J": 1, "cutoffs": [6, 6]}"#).unwrap_err();
    let msg = e.to_string();
    for s in ["model1", "model2", "general-heff", "microscopic-derive"] {
        assert!(msg.contains(s), "{msg}");
    }
}

#[test]
fn unknown_keys_and_units() {
    let e = parse_config(r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "cutoffs": [6, 6], "qpd": {"stpe": 1}}"#)
        .unwrap_err();
    assert!(e.to_string().starts_with("qpd.stpe"), "{e}");
    let micro = presets::preset_text("derive-params-example").unwrap();
    let mut v: Value = serde_json::from_str(micro).unwrap();
    v.as_object_mut().unwrap().remove("units");
    let e = parse_config(&v.to_string()).unwrap_err();
    assert!(e.to_string().starts_with("units"), "{e}");
}

#[test]
fn model1_trajectory_header_and_closed_fast_path() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("model1-closed", dir.path());
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,P00,P01,P10,P11,fidelity");
    assert_eq!(text.lines().count(), 2002);
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["diagnostics"]["trajectory"]["method"], "closed-eigendecomposition");
    let f = csv_column(&dir.path().join("trajectory.csv"), "fidelity");
    let min = f.iter().copied().fold(1.0, f64::min);
    assert!((min - 0.977).abs() < 0.003, "{min}");
}

#[test]
fn damped_trajectory_uses_the_master_equation() {
    let dir = tempfile::tempdir().unwrap();
    let r = parse_config(
        r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "gamma": 0.5, "cutoffs": [4, 4],
            "time": {"t_max": 2, "points": 21}}"#,
    )
    .unwrap();
    run_all(&[r], dir.path()).unwrap();
    let m = read_json(&dir.path().join("manifest.json"));
    let t = &m["diagnostics"]["trajectory"];
    assert_eq!(t["method"], "master-equation");
    assert!(t["integrator"]["accepted"].as_u64().unwrap() > 0);
    assert!(t["trace_error_max"].as_f64().unwrap() < 1e-8);
}

#[test]
fn model2_closed_fidelity_minimum() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("model2-closed", dir.path());
    let path = dir.path().join("trajectory.csv");
    let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,P00,P03,P10,P13,P21,P22,fidelity");
    let min = csv_column(&path, "fidelity").into_iter().fold(1.0, f64::min);
    assert!((min - 0.9643).abs() < 0.003, "{min}");
}

#[test]
fn vacuum_wigner_origin_row() {
    let dir = tempfile::tempdir().unwrap();
    let r = parse_config(
        r#"{"model": "model1", "K": 10, "F": 0, "J": 0, "gamma": 1, "cutoffs": [3, 3],
            "outputs": ["qpd"], "convergence": {"enabled": false},
            "qpd": {"re": [-1, 1], "im": [-1, 1], "step": 0.5, "s": [0], "modes": [1]}}"#,
    )
    .unwrap();
    run_all(&[r], dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("qpd_mode1_s0.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "re,im,value");
    assert!(text.lines().any(|l| l == "0,0,0.636619772368"), "{text}");
}

#[test]
fn model1_steady_measures() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("model1-steady", dir.path());
    let m = read_json(&dir.path().join("measures.json"));
    let n = m["negativity"].as_f64().unwrap();
    let d = m["D_ent"].as_f64().unwrap();
    assert!((d - (2.0 * n + 1.0)).abs() < 1e-11);
    assert!((m["E_cost"].as_f64().unwrap() - (n + 1.0).log2()).abs() < 1e-11);
    assert!((m["purity"].as_f64().unwrap() - 0.4212).abs() < 0.005);
    assert!((m["E_cost"].as_f64().unwrap() - 0.1413).abs() < 0.005);
    for ep in m["EP"].as_array().unwrap() {
        assert!((ep.as_f64().unwrap() - 0.1126).abs() < 0.005);
    }
    let manifest = read_json(&dir.path().join("manifest.json"));
    let ss = &manifest["diagnostics"]["steady_state"];
    assert_eq!(ss["sweep"]["converged"], true);
    assert!(ss["sweep"]["rounds"].as_array().unwrap().len() >= 2);
    assert!(ss["residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn outputs_are_deterministic_and_checksummed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": "model2", "K": 10, "F": 1, "J": 1, "gamma": 0.3333333333333333, "n_th": 0.01,
                  "cutoffs": [4, 5], "time": {"t_max": 1, "points": 11},
                  "outputs": ["trajectory", "steady-state", "measures", "qpd"],
                  "convergence": {"enabled": false},
                  "qpd": {"re": [-1, 1], "im": [-1, 1], "step": 0.5, "s": [0.5]}}"#;
    for dir in [&a, &b] {
        run_all(&parse_scenarios(cfg).unwrap(), dir.path()).unwrap();
    }
    let m = read_json(&a.path().join("manifest.json"));
    let files: Vec<String> =
        m["outputs"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    assert!(files.len() >= 6, "{files:?}");
    for f in files.iter().chain([&"manifest.json".to_string()]) {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert!(verify_manifest(a.path()).unwrap().is_empty());
    fs::write(a.path().join("measures.json"), "{}").unwrap();
    assert_eq!(verify_manifest(a.path()).unwrap(), vec!["measures.json".to_string()]);
}

#[test]
fn reference_matrices_batch() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("appendixB-matrices", dir.path());
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
    for (model, diag22) in [("model1", 40.0), ("model2", 20.0)] {
        let text = fs::read_to_string(dir.path().join(model).join("hamiltonian.csv")).unwrap();
        let row = text.lines().find(|l| l.starts_with("2,2,2,2,")).unwrap();
        let v: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(v, diag22, "{model}");
        assert_eq!(text.lines().count(), 82);
    }
}

#[test]
fn derived_parameters_are_written() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("derive-params-example", dir.path());
    let p = read_json(&dir.path().join("parameters.json"));
    let mode = &p["effective"]["modes"][0];
    let lambda = mode["lambda"].as_f64().unwrap();
    let g = p["dressed"]["modes"][0]["g_dressed"].as_f64().unwrap();
    let kerr = mode["kerr"].as_f64().unwrap();
    assert!((kerr + g * lambda.powi(3)).abs() < 1e-12 * g.abs().max(1.0) + 1e-15);
    assert_eq!(p["hierarchy"]["pass"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    fs::write(&ok, r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "cutoffs": [3, 3]}"#).unwrap();
    assert_eq!(bin().args(["validate", "--config"]).arg(&ok).output().unwrap().status.code(), Some(0));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"model": "model3", "cutoffs": [3, 3]}"#).unwrap();
    assert_eq!(bin().args(["validate", "--config"]).arg(&bad).output().unwrap().status.code(), Some(1));

    let stiff = dir.path().join("stiff.json");
    fs::write(
        &stiff,
        r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "gamma": 0.3, "cutoffs": [3, 3],
            "outputs": ["steady-state"], "convergence": {"enabled": false},
            "tolerances": {"steady_state": {"max_iterations": 1, "tolerance": 1e-300}}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = bin().args(["run", "--config"]).arg(&stiff).arg("--out").arg(&out).output().unwrap().status.code();
    assert_eq!(code, Some(2));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let code = bin().args(["run", "--config"]).arg(&ok).arg("--out").arg(blocker.join("sub")).output().unwrap().status.code();
    assert_eq!(code, Some(3));

    let code = bin().env("BLOCKADE_THREADS", "0").args(["reproduce", "--list"]).output().unwrap().status.code();
    assert_eq!(code, Some(1));
    let listing = bin().env("BLOCKADE_THREADS", "2").args(["reproduce", "--list"]).output().unwrap();
    assert!(String::from_utf8(listing.stdout).unwrap().lines().any(|l| l == "qpd-model2"));
}

#[test]
fn resonant_general_heff_is_model1() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m1 = r#"{"model": "model1", "K": 10, "F": 1, "J": 1, "cutoffs": [4, 4],
                 "outputs": ["hamiltonian", "trajectory"], "time": {"t_max": 5, "points": 51}}"#;
    let heff = r#"{"model": "general-heff", "K": 10, "F": 1, "J": 1, "energy": [7, 9], "omega_drv": [7, 9],
                   "cutoffs": [4, 4], "outputs": ["hamiltonian", "trajectory"], "time": {"t_max": 5, "points": 51}}"#;
    run_all(&parse_scenarios(m1).unwrap(), a.path()).unwrap();
    run_all(&parse_scenarios(heff).unwrap(), b.path()).unwrap();
    for f in ["hamiltonian.csv", "trajectory.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
