use std::fs;

use bulkgrow::config::Config;
use bulkgrow::experiments::{run_converge, run_simulate, run_stability, write_converge};
use bulkgrow::mesh::{generate_disk_mesh, load_mesh, save_mesh};

fn disk_config(kind: &str, extra_run: &str) -> Config {
    Config::from_json(&format!(
        r#"{{
        "model": {{"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"}},
        "geometry": {{"kind": "disk", "radii": [1.5], "h": 0.5}},
        "discretization": {{"k": 2, "q": 2, "tau": 0.01, "T": 0.1}},
        "run": {{"kind": "{kind}", "seed": 7{extra_run}}}
    }}"#
    ))
    .unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let c = disk_config("simulate", r#", "snapshots": 3"#);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_simulate(&c, a.path()).unwrap();
    run_simulate(&c, b.path()).unwrap();
    for name in ["diagnostics.csv", "snapshot_003_bulk.vtk", "snapshot_003_surface.vtk", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_echoes_config_and_mesh() {
    let c = disk_config("simulate", r#", "snapshots": 1"#);
    let dir = tempfile::tempdir().unwrap();
    run_simulate(&c, dir.path()).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["geometry"]["kind"], "disk");
    assert!(m["mesh"][0]["n_nodes"].as_u64().unwrap() > 0);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for o in outputs {
        assert!(dir.path().join(o).exists(), "{o}");
    }
}

#[test]
fn diagnostics_csv_parses() {
    let c = disk_config("simulate", r#", "snapshots": 2"#);
    let dir = tempfile::tempdir().unwrap();
    let out = run_simulate(&c, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "time");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), out.diagnostics.rows.len());
    assert_eq!(rows.len(), 11);
    assert!((rows.last().unwrap()[0] - 0.1).abs() < 1e-12);
    for r in &rows {
        // mean radius follows the exact radius
        assert!((r[7] - r[9]).abs() < 1e-3);
    }
}

#[test]
fn converge_writes_tables() {
    let mut c = disk_config("converge", "");
    c.geometry.h = bulkgrow::config::OneOrMany::Many(vec![0.6, 0.4]);
    let r = run_converge(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_converge(&c, &r, dir.path()).unwrap();
    let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 3);
    assert!(errors.starts_with("h_target,h,N,N_Gamma,tau,err_u"));
    let eoc = fs::read_to_string(dir.path().join("eoc.csv")).unwrap();
    assert!(eoc.lines().nth(1).unwrap().starts_with("space,"));
}

#[test]
fn converge_rejects_non_radial_setups() {
    let mut c = disk_config("converge", "");
    c.model.mu = 0.1;
    assert!(run_converge(&c).is_err());
}

#[test]
fn stability_tables_have_rows_per_level() {
    let c = Config::from_json(
        r#"{
        "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"},
        "geometry": {"kind": "disk", "radii": [1]},
        "discretization": {"k": 1, "q": 1, "tau": 1, "T": 0},
        "run": {"kind": "stability", "levels": 3, "samples": 10, "modes": ["dirichlet"]}
    }"#,
    )
    .unwrap();
    let t = run_stability(&c).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].1.rows.len(), 3);
    assert_eq!(t[0].1.columns, ["level", "h", "N", "N_Gamma", "max_ratio", "argmax_seed"]);
}

#[test]
fn file_geometry_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disk.bsm");
    save_mesh(&generate_disk_mesh(1.0, 0.5, 2).unwrap(), &path).unwrap();
    let c = Config::from_json(&format!(
        r#"{{
        "model": {{"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"}},
        "geometry": {{"kind": "file", "path": {:?}}},
        "discretization": {{"k": 2, "q": 2, "tau": 0.01, "T": 0.03}},
        "run": {{"kind": "simulate", "snapshots": 1}}
    }}"#,
        path
    ))
    .unwrap();
    let out = run_simulate(&c, &dir.path().join("out")).unwrap();
    assert_eq!(out.steps, 3);
    assert_eq!(load_mesh(&path).unwrap().n_nodes(), out.final_mesh.n_nodes());
    let mut wrong = c.clone();
    wrong.discretization.k = 1;
    assert!(run_simulate(&wrong, &dir.path().join("out1")).is_err());
}

#[test]
fn numerical_failure_keeps_last_good_state() {
    let c = Config::from_json(
        r#"{
        "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "poly:200*x"},
        "geometry": {"kind": "disk", "radii": [1], "h": 0.5},
        "discretization": {"k": 1, "q": 1, "tau": 0.05, "T": 5},
        "run": {"kind": "simulate", "snapshots": 2}
    }"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_simulate(&c, dir.path()).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert!(dir.path().join("last_good_bulk.vtk").exists());
    assert!(dir.path().join("diagnostics.csv").exists());
}
