use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bulkgrow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulkgrow"))
        .args(args)
        .current_dir(dir)
        .env("BULKGROW_THREADS", "2")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, kind: &str, model: &str, extra: &str) -> String {
    let text = format!(
        r#"{{
        "model": {model},
        "geometry": {{"kind": "disk", "radii": [1.5], "h": [0.6, 0.45]}},
        "discretization": {{"k": 2, "q": 2, "tau": [0.02, 0.01], "T": 0.04}},
        "run": {{"kind": "{kind}", "outputs": "out_{kind}", "snapshots": 2{extra}}}
    }}"#
    );
    let path = dir.join(format!("{kind}.json"));
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const MODEL: &str = r#"{"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"}"#;

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "simulate", MODEL, "");
    let out = bulkgrow(&["simulate", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["diagnostics.csv", "manifest.json", "snapshot_000_bulk.vtk", "snapshot_002_surface.vtk"] {
        assert!(dir.path().join("out_simulate").join(f).exists(), "{f}");
    }
}

#[test]
fn converge_prints_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "converge", MODEL, "");
    let out = bulkgrow(&["converge", &cfg, "--out", "grid"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("direction,fixed,coarse,fine,eoc_u"));
    assert!(dir.path().join("grid/errors.csv").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "simulate", r#"{"alpha": -1, "beta": 1, "mu": 0, "Q": "const:1.5"}"#, "");
    assert_eq!(bulkgrow(&["simulate", &bad], dir.path()).status.code(), Some(2));
    assert_eq!(bulkgrow(&["simulate", "missing.json"], dir.path()).status.code(), Some(2));
    // convergence needs a radial setup
    let nonradial = write_config(dir.path(), "converge", r#"{"alpha": 1, "beta": 1, "mu": 0.5, "Q": "const:1.5"}"#, "");
    assert_eq!(bulkgrow(&["converge", &nonradial], dir.path()).status.code(), Some(2));
    assert_eq!(bulkgrow(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "poly:200*x"},
        "geometry": {"kind": "disk", "radii": [1], "h": 0.5},
        "discretization": {"k": 1, "q": 1, "tau": 0.05, "T": 5},
        "run": {"kind": "simulate", "outputs": "out"}
    }"#;
    fs::write(dir.path().join("c.json"), text).unwrap();
    let out = bulkgrow(&["simulate", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/last_good_surface.vtk").exists());
}

#[test]
fn mesh_gen_and_info_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = bulkgrow(&["mesh", "gen", "--kind", "ellipsoid", "--radii", "0.5,0.5,1", "--h", "0.4", "-o", "e.bsm", "--vtk", "e"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("e_bulk.vtk").exists());
    let info = bulkgrow(&["mesh", "info", "e.bsm"], dir.path());
    assert!(info.status.success());
    let a: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&info.stdout).unwrap();
    assert_eq!(a, b);
    assert_eq!(a["dim_m"], 2);
    assert_eq!(a["degree"], 2);
}

#[test]
fn stability_and_regularization_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"},
        "geometry": {"kind": "disk", "radii": [1]},
        "discretization": {"k": 1, "q": 1, "tau": 1, "T": 0},
        "run": {"kind": "stability", "outputs": "stab", "levels": 3, "samples": 10}
    }"#;
    fs::write(dir.path().join("s.json"), text).unwrap();
    let out = bulkgrow(&["stability", "s.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("stab/stability_dirichlet.csv").exists());
    assert!(dir.path().join("stab/stability_robin.csv").exists());

    let cfg = write_config(dir.path(), "regularization", MODEL, r#", "mu_values": [0, 1]"#);
    let out = bulkgrow(&["regularization", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out_regularization/regularization.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "mu,time,max_displacement,max_u_diff,u_surface_seminorm");
    assert!(dir.path().join("out_regularization/mu_1_snapshot_002_bulk.vtk").exists());
}
