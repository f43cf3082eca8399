//! Experiment drivers shared by the command line tool and the test suites.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::{Config, GeometryKind};
use crate::coupled::{approximate_geometry, exact_geometry, initial_state, SimState, Simulation};
use crate::error::{Error, Result};
use crate::fem::SystemMatrices;
use crate::geom;
use crate::mesh::BulkSurfaceMesh;
use crate::model::ModelParams;
use crate::norms::{error_vs_oracle, ErrorReport, ErrorSample};
use crate::oracle::RadialOracle;
use crate::output::{write_vtk, Cell, Manifest, Table};
use crate::stability::{stability_sweep, Mode, SweepGeometry, SweepSpec};

/// Worker threads for independent experiment cells: the available
/// parallelism, capped by `BULKGROW_THREADS` when set.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("BULKGROW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(cap) if cap > 0 => avail.min(cap),
        _ => avail,
    }
}

/// Applies `f` to every item on up to [`worker_count`] threads; results keep
/// the input order.
pub fn parallel_map<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    let workers = worker_count().min(items.len()).max(1);
    if workers == 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let queue: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let item = queue[i].lock().unwrap().take().expect("each item is taken once");
                *results[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    results.into_iter().map(|r| r.into_inner().unwrap().expect("every item ran")).collect()
}

/// Discretization of one radial run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunSetup {
    pub q: usize,
    pub tau: f64,
    pub t_end: f64,
    /// Errors are evaluated every `sample_stride` steps and at the final step.
    pub sample_stride: usize,
}

/// Exact starting values at t = 0, τ, …, (q−1)τ, oldest first.
pub fn oracle_seeds(initial: &BulkSurfaceMesh, oracle: &RadialOracle, q: usize, tau: f64) -> Result<Vec<SimState>> {
    (0..q).map(|j| oracle.seed_state(initial, j as f64 * tau)).collect()
}

/// Runs the coupled scheme on `initial` (a ball of radius R0) from exact
/// starting values and records errors against the radial solution.
pub fn oracle_run(initial: &BulkSurfaceMesh, oracle: &RadialOracle, params: &ModelParams, setup: RunSetup) -> Result<ErrorReport> {
    if setup.sample_stride == 0 {
        return Err(Error::validation("sample stride must be positive"));
    }
    let seeds = oracle_seeds(initial, oracle, setup.q, setup.tau)?;
    let mut report = ErrorReport::new(initial.mesh_size(), setup.tau, setup.q, params.clone());
    let init = initial.positions().to_vec();
    let sample = |sim: &Simulation, report: &mut ErrorReport| -> Result<()> {
        let sys = SystemMatrices::assemble(sim.mesh())?;
        report.push(error_vs_oracle(sim.current(), &init, oracle, &sys, params)?);
        Ok(())
    };
    let mut sim = Simulation::new(initial.clone(), params.clone(), setup.q, setup.tau, seeds)?;
    sample(&sim, &mut report)?;
    let total = steps_between(sim.current().time, setup.t_end, setup.tau);
    for i in 1..=total {
        sim.advance()?;
        if i % setup.sample_stride == 0 || i == total {
            sample(&sim, &mut report)?;
        }
    }
    Ok(report)
}

fn steps_between(t0: f64, t1: f64, tau: f64) -> usize {
    ((t1 - t0) / tau).round().max(0.0) as usize
}

/// log(e_i / e_{i+1}) / log(p_i / p_{i+1}) for consecutive entries.
pub fn eoc(errors: &[f64], params: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(params.windows(2))
        .map(|(e, p)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect()
}

/// The radial solution for a config, when one exists (round geometry
/// centred at the origin, μ = 0, constant source).
pub fn oracle_for(config: &Config) -> Result<Option<RadialOracle>> {
    let g = &config.geometry;
    if !g.is_round() || config.model.mu != 0.0 || config.model.source.as_constant().is_none() {
        return Ok(None);
    }
    Ok(Some(RadialOracle::from_params(g.dim_m()?, g.radii3()?[0], &config.model)?))
}

/// Simulation for `config` on `mesh` with step `tau`: exact starting values
/// when the radial solution applies, otherwise exact (analytic shapes) or
/// approximate (mesh files) normal and curvature with u⁰ from the Robin
/// problem.
pub fn start_simulation(config: &Config, mesh: &BulkSurfaceMesh, tau: f64) -> Result<Simulation> {
    let params = &config.model;
    let q = config.discretization.q;
    if let (Some(o), 0.0) = (oracle_for(config)?, config.geometry.jitter) {
        return Simulation::new(mesh.clone(), params.clone(), q, tau, oracle_seeds(mesh, &o, q, tau)?);
    }
    let (normals, curvature) = match config.geometry.exact_surface()? {
        Some(s) if config.geometry.kind != GeometryKind::File => exact_geometry(mesh, &s),
        _ => approximate_geometry(mesh)?,
    };
    let s0 = initial_state(mesh, params, normals, curvature, 0.0)?;
    Simulation::new(mesh.clone(), params.clone(), q, tau, vec![s0])
}

/// Diagnostics of one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub time: f64,
    pub boundary_measure: f64,
    pub bulk_measure: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub mean_radius: f64,
    pub radius_std: f64,
}

pub const DIAGNOSTIC_COLUMNS: [&str; 10] = [
    "time",
    "boundary_measure",
    "bulk_measure",
    "min_H",
    "max_H",
    "min_u",
    "max_u",
    "mean_radius",
    "radius_std",
    "exact_radius",
];

pub fn diagnostics(state: &SimState, mesh: &BulkSurfaceMesh) -> Diagnostics {
    let nb = mesh.n_boundary();
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
    };
    let (min_h, max_h) = fold(&state.curvature);
    let (min_u, max_u) = fold(&state.pressure[..nb]);
    let radii: Vec<f64> = state.positions[..nb].iter().map(geom::norm).collect();
    let mean = radii.iter().sum::<f64>() / nb as f64;
    let var = radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / nb as f64;
    Diagnostics {
        time: state.time,
        boundary_measure: mesh.boundary_measure(),
        bulk_measure: mesh.bulk_measure(),
        min_h,
        max_h,
        min_u,
        max_u,
        mean_radius: mean,
        radius_std: var.sqrt(),
    }
}

fn diagnostics_row(d: &Diagnostics, exact_radius: f64) -> Vec<Cell> {
    [
        d.time,
        d.boundary_measure,
        d.bulk_measure,
        d.min_h,
        d.max_h,
        d.min_u,
        d.max_u,
        d.mean_radius,
        d.radius_std,
        exact_radius,
    ]
    .into_iter()
    .map(Cell::from)
    .collect()
}

/// Step indices of `count` uniformly spaced snapshot times after t = 0.
fn snapshot_steps(total: usize, count: usize) -> Vec<usize> {
    if total == 0 || count == 0 {
        return Vec::new();
    }
    let mut s: Vec<usize> = (1..=count).map(|i| (i * total + count / 2) / count).filter(|&s| s > 0).collect();
    s.dedup();
    s
}

/// Outcome of [`run_simulate`].
#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub diagnostics: Table,
    pub steps: usize,
    pub final_state: SimState,
    pub final_mesh: BulkSurfaceMesh,
    pub outputs: Vec<String>,
}

/// Runs the coupled stepper to the final time, writing VTK snapshots, a
/// diagnostics CSV and a manifest into `out`. On a stepping failure the last
/// successful state is written before the error is returned.
pub fn run_simulate(config: &Config, out: &Path) -> Result<SimulateOutcome> {
    fs::create_dir_all(out)?;
    let d = &config.discretization;
    let tau = d.tau.first();
    let mesh = config.geometry.mesh(config.geometry.h.first(), d.k, config.run.seed)?;
    let oracle = oracle_for(config)?;
    let mut sim = start_simulation(config, &mesh, tau)?;
    let mut manifest = Manifest::new(serde_json::to_value(config)?);
    manifest.mesh.push(mesh.stats());
    let mut table = Table::new(&DIAGNOSTIC_COLUMNS);
    let exact = |t: f64| oracle.as_ref().map(|o| o.radius(t)).unwrap_or(f64::NAN);
    let mut outputs = Vec::new();
    let snap = |state: &SimState, mesh: &BulkSurfaceMesh, stem: String, outputs: &mut Vec<String>| -> Result<()> {
        write_vtk(state, mesh, out, &stem)?;
        outputs.push(format!("{stem}_bulk.vtk"));
        outputs.push(format!("{stem}_surface.vtk"));
        Ok(())
    };
    let offset = sim.history().len() - 1;
    let total = steps_between(sim.current().time, d.t_end, tau);
    let snaps = snapshot_steps(total + offset, config.run.snapshots);
    let slot = |step: usize| {
        if step == 0 {
            Some(0)
        } else {
            snaps.iter().position(|&s| s == step).map(|k| k + 1)
        }
    };
    let beyond_end = |t: f64| t > d.t_end + 1e-9 * tau;
    for j in 0..=offset {
        let s = sim.history().get(offset - j);
        if beyond_end(s.time) {
            break;
        }
        let m = mesh.displace(s.positions.clone())?;
        table.push(diagnostics_row(&diagnostics(s, &m), exact(s.time)))?;
        if let Some(k) = slot(j) {
            snap(s, &m, format!("snapshot_{k:03}"), &mut outputs)?;
        }
    }
    let mut failure = None;
    for i in 1..=total {
        if let Err(e) = sim.advance() {
            failure = Some(e);
            break;
        }
        let st = sim.current();
        table.push(diagnostics_row(&diagnostics(st, sim.mesh()), exact(st.time)))?;
        if let Some(k) = slot(i + offset) {
            snap(st, sim.mesh(), format!("snapshot_{k:03}"), &mut outputs)?;
        }
    }
    if failure.is_some() {
        snap(sim.current(), sim.mesh(), "last_good".into(), &mut outputs)?;
    }
    table.write(&out.join("diagnostics.csv"))?;
    outputs.push("diagnostics.csv".into());
    manifest.outputs = outputs.clone();
    manifest.write(&out.join("manifest.json"))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let last = (0..=offset)
        .map(|j| sim.history().get(j))
        .find(|s| !beyond_end(s.time))
        .unwrap_or(sim.history().get(offset))
        .clone();
    Ok(SimulateOutcome {
        diagnostics: table,
        steps: sim.steps_taken(),
        final_mesh: mesh.displace(last.positions.clone())?,
        final_state: last,
        outputs,
    })
}

pub const ERROR_COLUMNS: [&str; 10] = ["h_target", "h", "N", "N_Gamma", "tau", "err_u", "err_x", "err_v", "err_nu", "err_H"];
pub const EOC_COLUMNS: [&str; 9] = ["direction", "fixed", "coarse", "fine", "eoc_u", "eoc_x", "eoc_v", "eoc_nu", "eoc_H"];

/// One cell of a convergence grid.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceCell {
    pub h_target: f64,
    pub h: f64,
    pub n: usize,
    pub n_gamma: usize,
    pub tau: f64,
    pub max_errors: ErrorSample,
}

#[derive(Clone, Debug)]
pub struct ConvergeResult {
    /// Row-major over (h, τ).
    pub cells: Vec<ConvergenceCell>,
    pub errors: Table,
    pub eoc: Table,
}

impl ConvergeResult {
    /// Errors for fixed τ index along the mesh sequence, with measured sizes.
    pub fn space_series(&self, tau_index: usize, n_tau: usize) -> (Vec<f64>, Vec<[f64; 5]>) {
        let cells: Vec<&ConvergenceCell> = self.cells.iter().skip(tau_index).step_by(n_tau).collect();
        (cells.iter().map(|c| c.h).collect(), cells.iter().map(|c| c.max_errors.values()).collect())
    }

    /// Errors for fixed h index along the time step sequence.
    pub fn time_series(&self, h_index: usize, n_tau: usize) -> (Vec<f64>, Vec<[f64; 5]>) {
        let cells = &self.cells[h_index * n_tau..(h_index + 1) * n_tau];
        (cells.iter().map(|c| c.tau).collect(), cells.iter().map(|c| c.max_errors.values()).collect())
    }
}

fn eoc_rows(table: &mut Table, direction: &str, fixed: f64, params: &[f64], errors: &[[f64; 5]]) -> Result<()> {
    for i in 0..params.len().saturating_sub(1) {
        let mut row: Vec<Cell> = vec![direction.into(), fixed.into(), params[i].into(), params[i + 1].into()];
        for q in 0..5 {
            row.push(eoc(&[errors[i][q], errors[i + 1][q]], &params[i..i + 2])[0].into());
        }
        table.push(row)?;
    }
    Ok(())
}

/// Full h × τ grid of L∞-in-time errors against the radial solution plus
/// estimated orders along both directions.
pub fn run_converge(config: &Config) -> Result<ConvergeResult> {
    let oracle = oracle_for(config)?.ok_or_else(|| {
        Error::validation("convergence runs need a disk or ball with mu = 0 and a constant source")
    })?;
    let d = &config.discretization;
    let hs = config.geometry.h.values();
    let taus = d.tau.values();
    let meshes = hs
        .iter()
        .map(|&h| config.geometry.mesh(h, d.k, config.run.seed))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..hs.len()).flat_map(|i| taus.iter().map(move |&t| (i, t))).collect();
    let reports = parallel_map(jobs.clone(), |(i, tau)| {
        let setup = RunSetup {
            q: d.q,
            tau,
            t_end: d.t_end,
            sample_stride: config.run.sample_stride,
        };
        oracle_run(&meshes[i], &oracle, &config.model, setup)
    });
    let mut errors = Table::new(&ERROR_COLUMNS);
    let mut cells = Vec::new();
    for ((i, tau), rep) in jobs.into_iter().zip(reports) {
        let m = &meshes[i];
        let e = rep?.max_in_time();
        let mut row: Vec<Cell> = vec![hs[i].into(), m.mesh_size().into(), m.n_nodes().into(), m.n_boundary().into(), tau.into()];
        row.extend(e.values().iter().map(|v| Cell::from(*v)));
        errors.push(row)?;
        cells.push(ConvergenceCell {
            h_target: hs[i],
            h: m.mesh_size(),
            n: m.n_nodes(),
            n_gamma: m.n_boundary(),
            tau,
            max_errors: e,
        });
    }
    let mut result = ConvergeResult {
        cells,
        errors,
        eoc: Table::new(&EOC_COLUMNS),
    };
    let mut eoc_table = Table::new(&EOC_COLUMNS);
    for (j, &tau) in taus.iter().enumerate() {
        let (h, e) = result.space_series(j, taus.len());
        eoc_rows(&mut eoc_table, "space", tau, &h, &e)?;
    }
    for (i, _) in hs.iter().enumerate() {
        let (t, e) = result.time_series(i, taus.len());
        eoc_rows(&mut eoc_table, "time", meshes[i].mesh_size(), &t, &e)?;
    }
    result.eoc = eoc_table;
    Ok(result)
}

/// Writes the convergence tables and a manifest into `out`.
pub fn write_converge(config: &Config, result: &ConvergeResult, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    result.errors.write(&out.join("errors.csv"))?;
    result.eoc.write(&out.join("eoc.csv"))?;
    let mut manifest = Manifest::new(serde_json::to_value(config)?);
    for h in config.geometry.h.values() {
        manifest.mesh.push(config.geometry.mesh(h, config.discretization.k, config.run.seed)?.stats());
    }
    manifest.outputs = vec!["errors.csv".into(), "eoc.csv".into()];
    manifest.write(&out.join("manifest.json"))
}

pub const REGULARIZATION_COLUMNS: [&str; 5] = ["mu", "time", "max_displacement", "max_u_diff", "u_surface_seminorm"];

/// States of a run at its snapshot steps (t = 0 first).
fn sampled_run(config: &Config, mesh: &BulkSurfaceMesh, params: &ModelParams) -> Result<Vec<(SimState, BulkSurfaceMesh)>> {
    let mut c = config.clone();
    c.model = params.clone();
    let tau = c.discretization.tau.first();
    let mut sim = start_simulation(&c, mesh, tau)?;
    let offset = sim.history().len() - 1;
    let total = steps_between(sim.current().time, c.discretization.t_end, tau);
    let snaps = snapshot_steps(total + offset, c.run.snapshots);
    let mut out = Vec::new();
    for j in 0..=offset {
        if j == 0 || snaps.contains(&j) {
            let s = sim.history().get(offset - j).clone();
            let m = mesh.displace(s.positions.clone())?;
            out.push((s, m));
        }
    }
    for i in 1..=total {
        sim.advance()?;
        if snaps.contains(&(i + offset)) {
            out.push((sim.current().clone(), sim.mesh().clone()));
        }
    }
    Ok(out)
}

/// Sampled states of every regularization run plus the comparison table.
#[derive(Clone, Debug)]
pub struct RegularizationResult {
    pub table: Table,
    /// (μ, states and meshes at the snapshot times), in configured order.
    pub runs: Vec<(f64, Vec<(SimState, BulkSurfaceMesh)>)>,
}

/// Runs every μ from identical meshes and starting geometry and compares
/// with μ = 0 at the snapshot times.
pub fn run_regularization(config: &Config) -> Result<RegularizationResult> {
    let d = &config.discretization;
    let mesh = config.geometry.mesh(config.geometry.h.first(), d.k, config.run.seed)?;
    let mut mus = config.run.mu_values.clone();
    if !mus.contains(&0.0) {
        mus.insert(0, 0.0);
    }
    let runs = parallel_map(mus.clone(), |mu| {
        let mut p = config.model.clone();
        p.mu = mu;
        sampled_run(config, &mesh, &p)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let base = &runs[mus.iter().position(|m| *m == 0.0).expect("zero inserted above")];
    let nb = mesh.n_boundary();
    let mut table = Table::new(&REGULARIZATION_COLUMNS);
    for mu in &config.run.mu_values {
        let run = &runs[mus.iter().position(|m| m == mu).expect("every value ran")];
        for ((s, m), (b, _)) in run.iter().zip(base) {
            let disp = s.positions[..nb]
                .iter()
                .zip(&b.positions[..nb])
                .map(|(x, y)| geom::dist(x, y))
                .fold(0.0, f64::max);
            let du = s.pressure[..nb]
                .iter()
                .zip(&b.pressure[..nb])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let sys = SystemMatrices::assemble(m)?;
            let semi = sys.stiff_surf.as_csr().bilinear(&s.pressure[..nb], &s.pressure[..nb]).max(0.0).sqrt();
            table.push(vec![(*mu).into(), s.time.into(), disp.into(), du.into(), semi.into()])?;
        }
    }
    let runs = config
        .run
        .mu_values
        .iter()
        .map(|mu| (*mu, runs[mus.iter().position(|m| m == mu).expect("every value ran")].clone()))
        .collect();
    Ok(RegularizationResult { table, runs })
}

/// Writes the comparison table, one VTK pair per μ and snapshot, and a
/// manifest into `out`.
pub fn write_regularization(config: &Config, result: &RegularizationResult, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    result.table.write(&out.join("regularization.csv"))?;
    let mut manifest = Manifest::new(serde_json::to_value(config)?);
    manifest.outputs.push("regularization.csv".into());
    for (i, (mu, states)) in result.runs.iter().enumerate() {
        if i == 0 {
            manifest.mesh.push(states[0].1.stats());
        }
        for (k, (state, mesh)) in states.iter().enumerate() {
            let stem = format!("mu_{mu}_snapshot_{k:03}");
            write_vtk(state, mesh, out, &stem)?;
            manifest.outputs.push(format!("{stem}_bulk.vtk"));
            manifest.outputs.push(format!("{stem}_surface.vtk"));
        }
    }
    manifest.write(&out.join("manifest.json"))
}

/// Writes one sweep table per mode and a manifest into `out`.
pub fn write_stability(config: &Config, tables: &[(Mode, Table)], out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut manifest = Manifest::new(serde_json::to_value(config)?);
    for (mode, table) in tables {
        let name = format!("stability_{}.csv", mode_name(*mode));
        table.write(&out.join(&name))?;
        manifest.outputs.push(name);
    }
    manifest.write(&out.join("manifest.json"))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Dirichlet => "dirichlet",
        Mode::Robin => "robin",
    }
}

pub const SWEEP_COLUMNS: [&str; 6] = ["level", "h", "N", "N_Gamma", "max_ratio", "argmax_seed"];

/// Stability sweeps for the configured geometry (disk or ball) and modes.
pub fn run_stability(config: &Config) -> Result<Vec<(Mode, Table)>> {
    let g = &config.geometry;
    let radius = g.radii3()?[0];
    let geometry = match g.kind {
        GeometryKind::Disk => SweepGeometry::Disk { radius },
        GeometryKind::Ball => SweepGeometry::Sphere { radius },
        _ => return Err(Error::validation("stability sweeps need a disk or ball geometry")),
    };
    let modes = if config.run.modes.is_empty() {
        vec![Mode::Dirichlet, Mode::Robin]
    } else {
        config.run.modes.clone()
    };
    let specs: Vec<SweepSpec> = modes
        .iter()
        .map(|&mode| {
            let mut s = SweepSpec::new(geometry, config.run.levels, config.run.samples, mode);
            s.degree = config.discretization.k;
            s.seed = config.run.seed;
            s
        })
        .collect();
    let rows = parallel_map(specs, |s| stability_sweep(&s));
    let mut out = Vec::new();
    for (mode, rows) in modes.into_iter().zip(rows) {
        let mut t = Table::new(&SWEEP_COLUMNS);
        for r in rows? {
            t.push(vec![r.level.into(), r.h.into(), r.n.into(), r.n_gamma.into(), r.max_ratio.into(), r.argmax_seed.into()])?;
        }
        out.push((mode, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str, extra: &str) -> Config {
        Config::from_json(&format!(
            r#"{{
            "model": {{"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"}},
            "geometry": {{"kind": "disk", "radii": [1.5], "h": [0.75, 0.5]}},
            "discretization": {{"k": 2, "q": 2, "tau": [0.02, 0.01], "T": 0.04}},
            "run": {{"kind": "{kind}"{extra}}}
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map((0..17).collect(), |i: i32| i * i);
        assert_eq!(v, (0..17).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn snapshot_schedule() {
        assert_eq!(snapshot_steps(0, 20), Vec::<usize>::new());
        assert_eq!(snapshot_steps(100, 20).len(), 20);
        assert_eq!(*snapshot_steps(100, 20).last().unwrap(), 100);
        assert_eq!(snapshot_steps(3, 20), vec![1, 2, 3]);
    }

    #[test]
    fn converge_grid_shape() {
        let r = run_converge(&config("converge", "")).unwrap();
        assert_eq!(r.cells.len(), 4);
        assert_eq!(r.errors.rows.len(), 4);
        assert_eq!(r.eoc.rows.len(), 4);
        // coarser meshes are worse at fixed τ
        let (_, e) = r.space_series(1, 2);
        assert!(e[0][0] > e[1][0]);
    }

    #[test]
    fn simulate_writes_outputs_and_tracks_radius() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config("simulate", r#", "snapshots": 4"#);
        c.geometry.h = crate::config::OneOrMany::One(0.5);
        c.discretization.tau = crate::config::OneOrMany::One(0.01);
        let out = run_simulate(&c, dir.path()).unwrap();
        assert!(dir.path().join("snapshot_004_surface.vtk").exists());
        assert!(dir.path().join("manifest.json").exists());
        let last = out.diagnostics.rows.last().unwrap();
        let (Cell::Float(mean), Cell::Float(exact)) = (&last[7], &last[9]) else { panic!() };
        assert!((mean - exact).abs() < 1e-3, "{mean} vs {exact}");
        c.discretization.t_end = 0.0;
        let dir0 = tempfile::tempdir().unwrap();
        let out0 = run_simulate(&c, dir0.path()).unwrap();
        assert_eq!(out0.steps, 0);
        assert!(dir0.path().join("snapshot_000_bulk.vtk").exists());
        assert!(!dir0.path().join("snapshot_001_bulk.vtk").exists());
    }

    #[test]
    fn regularization_duplicates_agree() {
        let mut c = config("regularization", r#", "mu_values": [0.1, 0.1], "snapshots": 2"#);
        c.geometry.h = crate::config::OneOrMany::One(0.75);
        let t = run_regularization(&c).unwrap().table;
        let half = t.rows.len() / 2;
        assert_eq!(t.rows[..half], t.rows[half..]);
        assert!(t.rows.iter().all(|r| matches!(r[2], Cell::Float(v) if v.is_finite())));
    }
}
