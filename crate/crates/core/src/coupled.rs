//! One linearly implicit BDF step of the coupled system and the driver
//! that advances a history of states.
//!
//! Every step freezes the geometry at the extrapolated positions and then
//! solves, in order: the Robin problem for u, the normal equation, the mean
//! curvature equation, the velocity law, the harmonic velocity extension and
//! the position update.

use std::collections::VecDeque;

use serde::Serialize;

use crate::bdf::{bdf_coefficients, BdfScheme};
use crate::error::{Error, Result};
use crate::fem::{assemble_f_h, assemble_f_nu, assemble_f_u, SystemMatrices};
use crate::geom::{self, Point};
use crate::mesh::BulkSurfaceMesh;
use crate::model::ModelParams;
use crate::sparse::{pcg, Jacobi, LaggedCholesky, SparseSym, DEFAULT_TOL};
use crate::surface::ExactSurface;

/// All unknowns at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub time: f64,
    /// Node positions x (N).
    pub positions: Vec<Point>,
    /// Bulk pressure u (N).
    pub pressure: Vec<f64>,
    /// Surface normal n (N_Γ).
    pub normals: Vec<Point>,
    /// Mean curvature H (N_Γ).
    pub curvature: Vec<f64>,
    /// Mesh velocity v (N).
    pub velocity: Vec<Point>,
    /// Normal speed V (N_Γ).
    pub normal_speed: Vec<f64>,
}

impl SimState {
    pub fn check_sizes(&self, n: usize, nb: usize) -> Result<()> {
        let ok = self.positions.len() == n
            && self.pressure.len() == n
            && self.velocity.len() == n
            && self.normals.len() == nb
            && self.curvature.len() == nb
            && self.normal_speed.len() == nb;
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("state sizes do not match a mesh with {n} nodes and {nb} boundary nodes")))
        }
    }

    pub fn boundary_pressure(&self) -> &[f64] {
        &self.pressure[..self.curvature.len()]
    }

    pub fn mesh(&self, reference: &BulkSurfaceMesh) -> Result<BulkSurfaceMesh> {
        reference.displace(self.positions.clone())
    }
}

/// The last q states, newest first, equally spaced in time.
#[derive(Clone, Debug)]
pub struct History {
    states: VecDeque<SimState>,
    capacity: usize,
    tau: f64,
}

impl History {
    pub fn new(capacity: usize, tau: f64) -> Result<Self> {
        if capacity == 0 || !(tau > 0.0) {
            return Err(Error::validation("history needs positive capacity and time step"));
        }
        Ok(Self {
            states: VecDeque::with_capacity(capacity),
            capacity,
            tau,
        })
    }

    pub fn push(&mut self, state: SimState) -> Result<()> {
        if let Some(last) = self.states.front() {
            let gap = state.time - last.time;
            if (gap - self.tau).abs() > 1e-9 * self.tau.max(last.time.abs()) {
                return Err(Error::validation(format!(
                    "state at t = {} does not follow t = {} by tau = {}",
                    state.time, last.time, self.tau
                )));
            }
        }
        self.states.push_front(state);
        self.states.truncate(self.capacity);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `j`-th newest state.
    pub fn get(&self, j: usize) -> &SimState {
        &self.states[j]
    }

    pub fn newest(&self) -> &SimState {
        &self.states[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &SimState> {
        self.states.iter()
    }
}

fn combine_scalars<'a>(items: impl Iterator<Item = &'a [f64]>, coeffs: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for (v, &c) in items.zip(coeffs) {
        if out.is_empty() {
            out = vec![0.0; v.len()];
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

fn combine_points<'a>(items: impl Iterator<Item = &'a [Point]>, coeffs: &[f64]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for (v, &c) in items.zip(coeffs) {
        if out.is_empty() {
            out = vec![[0.0; 3]; v.len()];
        }
        for (o, x) in out.iter_mut().zip(v) {
            for k in 0..3 {
                o[k] += c * x[k];
            }
        }
    }
    out
}

fn component(points: &[Point], c: usize) -> Vec<f64> {
    points.iter().map(|p| p[c]).collect()
}

/// Extrapolated geometry and fields together with the matrices assembled there.
#[derive(Clone, Debug)]
pub struct Extrapolated {
    pub positions: Vec<Point>,
    pub normals: Vec<Point>,
    pub curvature: Vec<f64>,
    pub pressure: Vec<f64>,
    pub velocity: Vec<Point>,
    pub mesh: BulkSurfaceMesh,
    pub matrices: SystemMatrices,
}

/// x̃ⁿ, ñⁿ, H̃ⁿ, ũⁿ (and ṽⁿ, used only as a solver start) from the q newest states.
pub fn extrapolated_geometry(history: &History, scheme: &BdfScheme, reference: &BulkSurfaceMesh) -> Result<Extrapolated> {
    let q = scheme.order();
    if history.len() < q {
        return Err(Error::validation(format!("BDF{q} needs {q} states, history has {}", history.len())));
    }
    let g = scheme.gamma();
    let states = || history.iter().take(q);
    let positions = combine_points(states().map(|s| s.positions.as_slice()), g);
    let normals = combine_points(states().map(|s| s.normals.as_slice()), g);
    let curvature = combine_scalars(states().map(|s| s.curvature.as_slice()), g);
    let pressure = combine_scalars(states().map(|s| s.pressure.as_slice()), g);
    let velocity = combine_points(states().map(|s| s.velocity.as_slice()), g);
    let mesh = reference.displace(positions.clone())?;
    let matrices = SystemMatrices::assemble(&mesh)?;
    Ok(Extrapolated {
        positions,
        normals,
        curvature,
        pressure,
        velocity,
        mesh,
        matrices,
    })
}

/// Iteration counts of the implicit solves of one step.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolverCounts {
    pub robin: usize,
    pub normal: usize,
    pub curvature: usize,
    pub extension: usize,
}

/// Reusable solver state for the bulk systems of consecutive steps.
#[derive(Clone, Debug)]
pub struct BulkSolvers {
    robin: LaggedCholesky,
    interior: LaggedCholesky,
}

impl Default for BulkSolvers {
    fn default() -> Self {
        Self {
            robin: LaggedCholesky::new(12),
            interior: LaggedCholesky::new(12),
        }
    }
}

impl BulkSolvers {
    pub fn refactorizations(&self) -> usize {
        self.robin.refactorizations() + self.interior.refactorizations()
    }
}

/// uⁿ = L(x̃ⁿ)⁻¹ f_u(x̃ⁿ, H̃ⁿ), started from `guess`.
pub fn robin_solve(
    ex: &Extrapolated,
    params: &ModelParams,
    t: f64,
    guess: &[f64],
    solvers: &mut BulkSolvers,
) -> Result<(Vec<f64>, usize)> {
    let l = ex.matrices.robin_operator(params.alpha, params.mu);
    let f = assemble_f_u(&ex.mesh, &ex.matrices, &ex.curvature, params, t)?;
    let mut u = guess.to_vec();
    let stats = solvers.robin.solve(&l, &f, &mut u, DEFAULT_TOL)?;
    Ok((u, stats.iterations))
}

/// (δ_0/τ) M_Γ + β A_Γ
fn surface_operator(m: &SystemMatrices, scheme: &BdfScheme, tau: f64, beta: f64) -> SparseSym {
    let c = scheme.delta()[0] / tau;
    SparseSym::new_unchecked(crate::sparse::CsrMatrix::combine(&[(c, &m.mass_surf), (beta, &m.stiff_surf)]))
}

/// −(1/τ) M_Γ Σ_{j≥1} δ_j w^{n−j}
fn history_load(m: &SystemMatrices, scheme: &BdfScheme, tau: f64, past: &[&[f64]]) -> Vec<f64> {
    let comb = combine_scalars(past.iter().copied(), &scheme.delta()[1..]);
    m.mass_surf.matvec(&comb).into_iter().map(|v| -v / tau).collect()
}

fn surface_solve(k: &SparseSym, rhs: &[f64], guess: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut x = guess.to_vec();
    let stats = pcg(k, rhs, &mut x, &Jacobi::new(k), DEFAULT_TOL)?;
    Ok((x, stats.iterations))
}

/// ((δ_0/τ) M_Γ + β A_Γ) nⁿ = f_ν(x̃, ñ) − α D u_Γⁿ − (1/τ) Σ_{j≥1} δ_j M_Γ n^{n−j}
pub fn normal_step(
    ex: &Extrapolated,
    history: &History,
    u_surf: &[f64],
    scheme: &BdfScheme,
    tau: f64,
    params: &ModelParams,
) -> Result<(Vec<Point>, usize)> {
    let d = ex.mesh.dim();
    let q = scheme.order();
    let k = surface_operator(&ex.matrices, scheme, tau, params.beta);
    let f_nu = assemble_f_nu(&ex.mesh, &ex.normals, params.beta)?;
    let du = ex.matrices.apply_tangrad(u_surf);
    let mut out = vec![[0.0; 3]; u_surf.len()];
    let mut iters = 0;
    for c in 0..d {
        let past: Vec<Vec<f64>> = history.iter().take(q).map(|s| component(&s.normals, c)).collect();
        let refs: Vec<&[f64]> = past.iter().map(|v| v.as_slice()).collect();
        let hist = history_load(&ex.matrices, scheme, tau, &refs);
        let rhs: Vec<f64> = (0..u_surf.len())
            .map(|j| f_nu.component(c)[j] - params.alpha * du.component(c)[j] + hist[j])
            .collect();
        let (nc, it) = surface_solve(&k, &rhs, &component(&ex.normals, c))?;
        iters += it;
        for (o, v) in out.iter_mut().zip(nc) {
            o[c] = v;
        }
    }
    Ok((out, iters))
}

/// ((δ_0/τ) M_Γ + β A_Γ) Hⁿ = f_H(x̃, ñ, Ṽ) + α A_Γ u_Γⁿ − (1/τ) Σ_{j≥1} δ_j M_Γ H^{n−j},
/// with Ṽ = −β H̃ + α ũ_Γ.
pub fn curvature_step(
    ex: &Extrapolated,
    history: &History,
    u_surf: &[f64],
    scheme: &BdfScheme,
    tau: f64,
    params: &ModelParams,
) -> Result<(Vec<f64>, usize)> {
    let nb = u_surf.len();
    let q = scheme.order();
    let k = surface_operator(&ex.matrices, scheme, tau, params.beta);
    let v_tilde: Vec<f64> = (0..nb)
        .map(|j| -params.beta * ex.curvature[j] + params.alpha * ex.pressure[j])
        .collect();
    let f_h = assemble_f_h(&ex.mesh, &ex.normals, &v_tilde)?;
    let au = ex.matrices.stiff_surf.matvec(u_surf);
    let past: Vec<&[f64]> = history.iter().take(q).map(|s| s.curvature.as_slice()).collect();
    let hist = history_load(&ex.matrices, scheme, tau, &past);
    let rhs: Vec<f64> = (0..nb).map(|j| f_h[j] + params.alpha * au[j] + hist[j]).collect();
    surface_solve(&k, &rhs, &ex.curvature)
}

/// Vⁿ = −β Hⁿ + α u_Γⁿ and v_Γⁿ = Vⁿ nⁿ nodally.
pub fn velocity_law(u_surf: &[f64], curvature: &[f64], normals: &[Point], params: &ModelParams) -> (Vec<f64>, Vec<Point>) {
    let v: Vec<f64> = u_surf
        .iter()
        .zip(curvature)
        .map(|(u, h)| -params.beta * h + params.alpha * u)
        .collect();
    let vg = v.iter().zip(normals).map(|(s, n)| geom::scale(n, *s)).collect();
    (v, vg)
}

/// Componentwise A_ΩΩ v_Ω = −A_ΩΓ v_Γ.
pub fn harmonic_extension(
    matrices: &SystemMatrices,
    boundary_velocity: &[Point],
    dim: usize,
    guess: &[Point],
    solvers: &mut BulkSolvers,
) -> Result<(Vec<Point>, usize)> {
    let (n, nb) = (matrices.n_nodes(), matrices.n_boundary());
    let a_oo = matrices.stiff_interior();
    let a_og = matrices.stiff_interior_boundary();
    let mut v = vec![[0.0; 3]; n];
    v[..nb].copy_from_slice(boundary_velocity);
    let mut iters = 0;
    if n == nb {
        return Ok((v, 0));
    }
    for c in 0..dim {
        let g = component(boundary_velocity, c);
        let rhs: Vec<f64> = a_og.matvec(&g).into_iter().map(|x| -x).collect();
        let mut x: Vec<f64> = guess[nb..].iter().map(|p| p[c]).collect();
        let stats = solvers.interior.solve(&a_oo, &rhs, &mut x, DEFAULT_TOL)?;
        iters += stats.iterations;
        for (vi, xi) in v[nb..].iter_mut().zip(x) {
            vi[c] = xi;
        }
    }
    Ok((v, iters))
}

/// xⁿ = (τ vⁿ − Σ_{j≥1} δ_j x^{n−j}) / δ_0
pub fn position_update(scheme: &BdfScheme, history: &History, velocity: &[Point], tau: f64) -> Vec<Point> {
    let q = scheme.order();
    let d = scheme.delta();
    let past = combine_points(history.iter().take(q).map(|s| s.positions.as_slice()), &d[1..]);
    velocity
        .iter()
        .zip(&past)
        .map(|(v, p)| {
            let mut x = [0.0; 3];
            for k in 0..3 {
                x[k] = (tau * v[k] - p[k]) / d[0];
            }
            x
        })
        .collect()
}

/// Outcome of one step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SimState,
    pub mesh: BulkSurfaceMesh,
    pub iterations: SolverCounts,
}

/// Advance by one step using BDF of the scheme's order; `step_index` only
/// labels errors.
pub fn step(
    history: &History,
    scheme: &BdfScheme,
    tau: f64,
    params: &ModelParams,
    reference: &BulkSurfaceMesh,
    solvers: &mut BulkSolvers,
    step_index: usize,
) -> Result<StepOutcome> {
    let ctx = |substep: &'static str| {
        move |e: Error| Error::Step {
            step: step_index,
            substep,
            source: Box::new(e),
        }
    };
    if history.len() < scheme.order() {
        return Err(ctx("extrapolate")(Error::validation("history shorter than the BDF order")));
    }
    let t = history.newest().time + tau;
    let ex = extrapolated_geometry(history, scheme, reference).map_err(ctx("extrapolate"))?;
    let (u, it_u) = robin_solve(&ex, params, t, &ex.pressure, solvers).map_err(ctx("robin_solve"))?;
    let nb = reference.n_boundary();
    let u_surf = &u[..nb];
    let (normals, it_n) = normal_step(&ex, history, u_surf, scheme, tau, params).map_err(ctx("normal_step"))?;
    let (curvature, it_h) = curvature_step(&ex, history, u_surf, scheme, tau, params).map_err(ctx("curvature_step"))?;
    let (normal_speed, v_surf) = velocity_law(u_surf, &curvature, &normals, params);
    let (velocity, it_v) = harmonic_extension(&ex.matrices, &v_surf, reference.dim(), &ex.velocity, solvers)
        .map_err(ctx("harmonic_extension"))?;
    let positions = position_update(scheme, history, &velocity, tau);
    let mesh = reference.displace(positions.clone()).map_err(ctx("position_update"))?;
    Ok(StepOutcome {
        state: SimState {
            time: t,
            positions,
            pressure: u,
            normals,
            curvature,
            velocity,
            normal_speed,
        },
        mesh,
        iterations: SolverCounts {
            robin: it_u,
            normal: it_n,
            curvature: it_h,
            extension: it_v,
        },
    })
}

/// Initial normal and mean curvature from the mesh alone: nodal averages of
/// facet normals (evaluated at each node of the curved facets) and
/// H = (M_Γ⁻¹ A_Γ x) · n.
pub fn approximate_geometry(mesh: &BulkSurfaceMesh) -> Result<(Vec<Point>, Vec<f64>)> {
    let nb = mesh.n_boundary();
    let (m, d) = (mesh.dim_m(), mesh.dim());
    let r = mesh.topology().surface_reference();
    let mut acc = vec![[0.0; 3]; nb];
    for f in 0..mesh.n_facets() {
        let nodes = mesh.facet(f);
        let outward = mesh.facet_outward_normal(f);
        for (a, &node) in nodes.iter().enumerate() {
            let (_, dphi) = crate::reference::shape_functions(m, mesh.degree(), &r.nodes[a]);
            let jac = mesh.jacobian(nodes, &dphi, m);
            let mut n = if m == 1 {
                [jac[0][1], -jac[0][0], 0.0]
            } else {
                geom::cross(&jac[0], &jac[1])
            };
            if geom::dot(&n, &outward) < 0.0 {
                n = geom::scale(&n, -1.0);
            }
            let len = geom::norm(&n);
            if !(len > 0.0) {
                return Err(Error::geometry(f, "degenerate boundary facet"));
            }
            acc[node] = geom::add(&acc[node], &n);
        }
    }
    let normals: Vec<Point> = acc.iter().map(|n| geom::scale(n, 1.0 / geom::norm(n))).collect();
    let sys = SystemMatrices::assemble(mesh)?;
    let mut curvature = vec![0.0; nb];
    for c in 0..d {
        let xc: Vec<f64> = mesh.boundary_positions().iter().map(|p| p[c]).collect();
        let rhs = sys.stiff_surf.matvec(&xc);
        let (w, _) = surface_solve(&sys.mass_surf, &rhs, &vec![0.0; nb])?;
        for j in 0..nb {
            curvature[j] += w[j] * normals[j][c];
        }
    }
    Ok((normals, curvature))
}

/// Exact normal and mean curvature at the boundary nodes of a mesh whose
/// boundary nodes lie on `surface`.
pub fn exact_geometry(mesh: &BulkSurfaceMesh, surface: &ExactSurface) -> (Vec<Point>, Vec<f64>) {
    let b = mesh.boundary_positions();
    (b.iter().map(|p| surface.normal(p)).collect(), b.iter().map(|p| surface.mean_curvature(p)).collect())
}

/// Initial state for runs without an exact solution: u⁰ solves the discrete
/// Robin problem with the given curvature, and v⁰ is the harmonic extension
/// of V⁰ n⁰.
pub fn initial_state(
    mesh: &BulkSurfaceMesh,
    params: &ModelParams,
    normals: Vec<Point>,
    curvature: Vec<f64>,
    t0: f64,
) -> Result<SimState> {
    let sys = SystemMatrices::assemble(mesh)?;
    let l = sys.robin_operator(params.alpha, params.mu);
    let f = assemble_f_u(mesh, &sys, &curvature, params, t0)?;
    let mut solvers = BulkSolvers::default();
    let mut u = vec![0.0; mesh.n_nodes()];
    solvers.robin.solve(&l, &f, &mut u, DEFAULT_TOL)?;
    let nb = mesh.n_boundary();
    let (normal_speed, v_surf) = velocity_law(&u[..nb], &curvature, &normals, params);
    let guess = vec![[0.0; 3]; mesh.n_nodes()];
    let (velocity, _) = harmonic_extension(&sys, &v_surf, mesh.dim(), &guess, &mut solvers)?;
    Ok(SimState {
        time: t0,
        positions: mesh.positions().to_vec(),
        pressure: u,
        normals,
        curvature,
        velocity,
        normal_speed,
    })
}

/// Time integration driver: owns the history and advances it step by step.
/// While fewer than q states are available the step uses BDF of the
/// available order, which bootstraps runs started from a single state.
#[derive(Clone, Debug)]
pub struct Simulation {
    reference: BulkSurfaceMesh,
    params: ModelParams,
    schemes: Vec<BdfScheme>,
    history: History,
    solvers: BulkSolvers,
    steps: usize,
    mesh: BulkSurfaceMesh,
    last_counts: SolverCounts,
}

impl Simulation {
    /// `seeds` are oldest first and equally spaced by `tau`.
    pub fn new(reference: BulkSurfaceMesh, params: ModelParams, q: usize, tau: f64, seeds: Vec<SimState>) -> Result<Self> {
        params.validate()?;
        if seeds.is_empty() || seeds.len() > q {
            return Err(Error::validation(format!("need between 1 and {q} seed states, got {}", seeds.len())));
        }
        let schemes = (1..=q).map(bdf_coefficients).collect::<Result<Vec<_>>>()?;
        let mut history = History::new(q, tau)?;
        for s in seeds {
            s.check_sizes(reference.n_nodes(), reference.n_boundary())?;
            history.push(s)?;
        }
        let mesh = reference.displace(history.newest().positions.clone())?;
        Ok(Self {
            reference,
            params,
            schemes,
            history,
            solvers: BulkSolvers::default(),
            steps: 0,
            mesh,
            last_counts: SolverCounts::default(),
        })
    }

    pub fn current(&self) -> &SimState {
        self.history.newest()
    }

    pub fn mesh(&self) -> &BulkSurfaceMesh {
        &self.mesh
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn tau(&self) -> f64 {
        self.history.tau()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn last_iterations(&self) -> SolverCounts {
        self.last_counts
    }

    pub fn refactorizations(&self) -> usize {
        self.solvers.refactorizations()
    }

    pub fn advance(&mut self) -> Result<&SimState> {
        let order = self.history.len().min(self.schemes.len());
        let scheme = &self.schemes[order - 1];
        let out = step(
            &self.history,
            scheme,
            self.history.tau(),
            &self.params,
            &self.reference,
            &mut self.solvers,
            self.steps + 1,
        )?;
        self.history.push(out.state)?;
        self.mesh = out.mesh;
        self.last_counts = out.iterations;
        self.steps += 1;
        Ok(self.history.newest())
    }

    /// Step until the current time reaches `t_end` (within half a step).
    pub fn run_until(&mut self, t_end: f64, mut observe: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        while self.current().time < t_end - 0.5 * self.tau() {
            self.advance()?;
            observe(self)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_ball_mesh, generate_disk_mesh};
    use crate::model::Source;
    use crate::oracle::RadialOracle;

    fn params(q: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.0, Source::Constant(q)).unwrap()
    }

    #[test]
    fn stationary_history_extrapolates_to_itself() {
        let mesh = generate_disk_mesh(1.0, 0.4, 2).unwrap();
        let o = RadialOracle::new(1, 1.0, 1.5, 1.0, 1.0).unwrap();
        let s = o.seed_state(&mesh, 0.0).unwrap();
        let mut h = History::new(2, 0.1).unwrap();
        h.push(s.clone()).unwrap();
        let mut s1 = s.clone();
        s1.time = 0.1;
        h.push(s1).unwrap();
        let scheme = bdf_coefficients(2).unwrap();
        let ex = extrapolated_geometry(&h, &scheme, &mesh).unwrap();
        for (a, b) in ex.positions.iter().zip(&s.positions) {
            assert!(geom::dist(a, b) < 1e-14);
        }
        let direct = SystemMatrices::assemble(&mesh).unwrap();
        let diff = CsrMatrix::combine(&[(1.0, &ex.matrices.stiff_bulk), (-1.0, &direct.stiff_bulk)]);
        assert!(diff.max_abs() < 1e-12);
        // bad spacing is rejected
        let mut bad = s.clone();
        bad.time = 0.35;
        assert!(h.push(bad).is_err());
    }

    use crate::sparse::CsrMatrix;

    #[test]
    fn one_euler_step_matches_radius_ode() {
        let mesh = generate_ball_mesh([1.0; 3], 0.5, 2).unwrap();
        let o = RadialOracle::new(2, 1.0, 1.5, 1.0, 1.0).unwrap();
        let p = params(1.5);
        let tau = 1e-3;
        let mut sim = Simulation::new(mesh.clone(), p, 1, tau, vec![o.seed_state(&mesh, 0.0).unwrap()]).unwrap();
        sim.advance().unwrap();
        let s = sim.current();
        let nb = mesh.n_boundary();
        let mean_r: f64 = s.positions[..nb].iter().map(geom::norm).sum::<f64>() / nb as f64;
        let expect = 1.0 + tau * o.normal_speed(0.0);
        assert!((mean_r - expect).abs() < 0.05 * tau, "{mean_r} vs {expect}");
    }

    #[test]
    fn equilibrium_is_preserved() {
        // R0 = (m+1) Q gives a stationary sphere
        let mesh = generate_disk_mesh(1.0, 0.3, 2).unwrap();
        let o = RadialOracle::new(1, 1.0, 0.5, 1.0, 1.0).unwrap();
        let p = params(0.5);
        let seeds = vec![o.seed_state(&mesh, 0.0).unwrap(), o.seed_state(&mesh, 0.01).unwrap()];
        let mut sim = Simulation::new(mesh.clone(), p, 2, 0.01, seeds).unwrap();
        for _ in 0..5 {
            sim.advance().unwrap();
        }
        let drift = sim
            .current()
            .positions
            .iter()
            .zip(mesh.positions())
            .map(|(a, b)| geom::dist(a, b))
            .fold(0.0, f64::max);
        assert!(drift < 1e-3, "{drift}");
    }

    #[test]
    fn bootstrap_from_single_state() {
        let mesh = generate_disk_mesh(1.0, 0.4, 2).unwrap();
        let (n, h) = exact_geometry(&mesh, &ExactSurface::circle(1.0));
        let p = params(1.5);
        let s0 = initial_state(&mesh, &p, n, h, 0.0).unwrap();
        let mut sim = Simulation::new(mesh, p, 3, 1e-2, vec![s0]).unwrap();
        for _ in 0..4 {
            sim.advance().unwrap();
        }
        assert_eq!(sim.history().len(), 3);
        assert!((sim.current().time - 0.04).abs() < 1e-14);
    }

    #[test]
    fn approximate_geometry_on_sphere() {
        let mesh = generate_ball_mesh([1.0; 3], 0.3, 2).unwrap();
        let (n, h) = approximate_geometry(&mesh).unwrap();
        let (ne, _) = exact_geometry(&mesh, &ExactSurface::sphere(1.0));
        let worst = n.iter().zip(&ne).map(|(a, b)| geom::dist(a, b)).fold(0.0, f64::max);
        assert!(worst < 0.05, "{worst}");
        let mean_h = h.iter().sum::<f64>() / h.len() as f64;
        assert!((mean_h - 2.0).abs() < 0.1, "{mean_h}");
    }

    #[test]
    fn step_error_carries_context() {
        let mesh = generate_disk_mesh(1.0, 0.4, 1).unwrap();
        let o = RadialOracle::new(1, 1.0, 1.5, 1.0, 1.0).unwrap();
        let newer = o.seed_state(&mesh, 0.1).unwrap();
        let mut older = o.seed_state(&mesh, 0.0).unwrap();
        // extrapolation 2 x_new - x_old then inverts elements
        for (i, x) in older.positions.iter_mut().enumerate() {
            x[0] += if i % 2 == 0 { 5.0 } else { -5.0 };
        }
        let mut sim = Simulation::new(mesh, params(1.5), 2, 0.1, vec![older, newer]).unwrap();
        match sim.advance() {
            Err(Error::Step { step: 1, substep, source }) => {
                assert_eq!(substep, "extrapolate");
                assert!(matches!(*source, Error::Geometry { .. }));
            }
            other => panic!("expected a step error, got {other:?}"),
        }
    }
}
