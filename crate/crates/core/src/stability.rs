//! Mesh-uniformity experiments for the discrete harmonic extension
//! (H^{1/2}(Γ_h) → H¹(Ω_h)) and the discrete Robin boundary map
//! (L²(Γ_h) → H¹(Γ_h)).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::SystemMatrices;
use crate::mesh::{ball_mesh_with_cells, disk_mesh_with_rings, BulkSurfaceMesh};
use crate::model::ModelParams;
use crate::norms::{norm_h_half, norm_k, norm_m, Block, HalfNorm};
use crate::sparse::{schur_dirichlet_solve, solve_spd, CholeskyFactor, SymbolicCholesky, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dirichlet,
    Robin,
}

fn is_zero(g: &[f64]) -> bool {
    g.iter().all(|v| *v == 0.0)
}

/// ‖u_h‖_{H¹(Ω_h)} / ‖g‖_{H^{1/2}(Γ_h)} for the discrete harmonic extension
/// u_h of g; zero for g = 0.
pub fn dirichlet_ratio(mesh: &BulkSurfaceMesh, g: &[f64], matrices: &SystemMatrices) -> Result<f64> {
    check_trace(mesh, g)?;
    if is_zero(g) {
        return Ok(0.0);
    }
    let n = mesh.n_nodes();
    let u = schur_dirichlet_solve(&matrices.stiff_bulk, g, &vec![0.0; n - g.len()], DEFAULT_TOL)?;
    Ok(norm_k(&u, matrices, Block::Bulk)? / norm_h_half(g, &matrices.mass_surf, &matrices.stiff_surf)?)
}

/// ‖γu_h‖_{H¹(Γ_h)} / ‖g‖_{L²(Γ_h)} where (A_Ω̄ + γᵀM_Γγ)u_h = γᵀM_Γ g;
/// zero for g = 0. Requires α = 1 and μ = 0.
pub fn robin_ratio(mesh: &BulkSurfaceMesh, g: &[f64], matrices: &SystemMatrices, params: &ModelParams) -> Result<f64> {
    check_trace(mesh, g)?;
    if params.alpha != 1.0 || params.mu != 0.0 {
        return Err(Error::validation("the Robin ratio is defined for alpha = 1 and mu = 0"));
    }
    if is_zero(g) {
        return Ok(0.0);
    }
    let l = matrices.robin_operator(1.0, 0.0);
    let mut rhs = matrices.mass_surf.matvec(g);
    rhs.resize(mesh.n_nodes(), 0.0);
    let u = solve_spd(&l, &rhs, DEFAULT_TOL)?;
    Ok(norm_k(&u[..g.len()], matrices, Block::Surface)? / norm_m(g, matrices, Block::Surface)?)
}

fn check_trace(mesh: &BulkSurfaceMesh, g: &[f64]) -> Result<()> {
    if g.len() != mesh.n_boundary() {
        return Err(Error::validation(format!(
            "boundary field of length {} for {} boundary nodes",
            g.len(),
            mesh.n_boundary()
        )));
    }
    Ok(())
}

/// Ratio evaluator with factorizations reused across many boundary fields.
pub struct RatioOperator {
    mode: Mode,
    sys: SystemMatrices,
    factor: CholeskyFactor,
    half: Option<HalfNorm>,
}

impl RatioOperator {
    pub fn new(mesh: &BulkSurfaceMesh, mode: Mode) -> Result<Self> {
        let sys = SystemMatrices::assemble(mesh)?;
        let (a, half) = match mode {
            Mode::Dirichlet => (sys.stiff_interior(), Some(HalfNorm::new(&sys.mass_surf, &sys.stiff_surf)?)),
            Mode::Robin => (sys.robin_operator(1.0, 0.0), None),
        };
        let factor = CholeskyFactor::factor(&SymbolicCholesky::analyze(&a), &a)?;
        Ok(Self { mode, sys, factor, half })
    }

    pub fn matrices(&self) -> &SystemMatrices {
        &self.sys
    }

    /// Bulk solution for the boundary data g.
    fn solve(&self, g: &[f64]) -> Vec<f64> {
        match self.mode {
            Mode::Dirichlet => {
                let coupling = self.sys.stiff_interior_boundary().matvec(g);
                let rhs: Vec<f64> = coupling.iter().map(|c| -c).collect();
                let mut u = g.to_vec();
                u.extend(self.factor.solve(&rhs));
                u
            }
            Mode::Robin => {
                let mut rhs = self.sys.mass_surf.matvec(g);
                rhs.resize(self.sys.n_nodes(), 0.0);
                self.factor.solve(&rhs)
            }
        }
    }

    fn numerator_denominator(&self, g: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        Ok(match self.mode {
            Mode::Dirichlet => (
                norm_k(u, &self.sys, Block::Bulk)?,
                self.half.as_ref().map(|h| h.norm(g)).unwrap_or(f64::NAN),
            ),
            Mode::Robin => (
                norm_k(&u[..g.len()], &self.sys, Block::Surface)?,
                norm_m(g, &self.sys, Block::Surface)?,
            ),
        })
    }

    pub fn ratio(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.sys.n_boundary() {
            return Err(Error::validation("boundary field has the wrong length"));
        }
        if is_zero(g) {
            return Ok(0.0);
        }
        let (num, den) = self.numerator_denominator(g, &self.solve(g))?;
        Ok(num / den)
    }

    /// One power-iteration step for the generalized Rayleigh quotient whose
    /// square root is the ratio.
    pub fn boost(&self, g: &[f64]) -> Vec<f64> {
        let nb = g.len();
        let u = self.solve(g);
        match self.mode {
            Mode::Dirichlet => {
                // g ← G⁻¹ Eᵀ K E g with E the extension and G the H^{1/2} Gram matrix
                let y = self.sys.bulk_h1().matvec(&u);
                let interior = self.factor.solve(&y[nb..]);
                let back = self.sys.stiff_interior_boundary().transpose().matvec(&interior);
                let r: Vec<f64> = y[..nb].iter().zip(&back).map(|(a, b)| a - b).collect();
                let half = self.half.as_ref().expect("Dirichlet mode carries the eigenbasis");
                half.apply_gram_inverse(&r)
            }
            Mode::Robin => {
                // g ← γR⁻¹γᵀ K_Γ γR⁻¹γᵀ M_Γ g
                let mut y = self.sys.surface_h1().matvec(&u[..nb]);
                y.resize(self.sys.n_nodes(), 0.0);
                let mut w = self.factor.solve(&y);
                w.truncate(nb);
                w
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SweepGeometry {
    Disk { radius: f64 },
    Sphere { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSet {
    Random,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub geometry: SweepGeometry,
    pub levels: usize,
    pub samples: usize,
    pub mode: Mode,
    pub degree: usize,
    pub seed: u64,
    pub sample_set: SampleSet,
    pub boost_steps: usize,
}

impl SweepSpec {
    pub fn new(geometry: SweepGeometry, levels: usize, samples: usize, mode: Mode) -> Self {
        Self {
            geometry,
            levels,
            samples,
            mode,
            degree: 1,
            seed: 2024,
            sample_set: SampleSet::Random,
            boost_steps: 20,
        }
    }

    /// Mesh of refinement level `l`: disks double the ring count per level,
    /// spheres grow the cube grid by about 1.5 per level.
    pub fn mesh(&self, level: usize) -> Result<BulkSurfaceMesh> {
        match self.geometry {
            SweepGeometry::Disk { radius } => disk_mesh_with_rings(radius, 2 << level, self.degree),
            SweepGeometry::Sphere { radius } => {
                let cells = (0..level).fold(2usize, |c, _| (3 * c).div_ceil(2));
                ball_mesh_with_cells([radius; 3], cells, self.degree)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: usize,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_Gamma")]
    pub n_gamma: usize,
    pub max_ratio: f64,
    pub argmax_seed: u64,
}

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn normalized(mut g: Vec<f64>) -> Vec<f64> {
    let s = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        g.iter_mut().for_each(|v| *v /= s);
    }
    g
}

/// Maximum stability ratio per refinement level over pseudo-random boundary
/// fields, followed by power-iteration boosting from the worst sample.
pub fn stability_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.levels < 3 {
        return Err(Error::validation(format!("a sweep needs at least 3 levels, got {}", spec.levels)));
    }
    if spec.sample_set == SampleSet::Random && spec.samples < 10 {
        return Err(Error::validation(format!("a sweep needs at least 10 samples, got {}", spec.samples)));
    }
    let mut rows = Vec::with_capacity(spec.levels);
    for level in 0..spec.levels {
        let mesh = spec.mesh(level)?;
        let op = RatioOperator::new(&mesh, spec.mode)?;
        let nb = mesh.n_boundary();
        let (mut best, mut best_seed, mut best_field) = (f64::NEG_INFINITY, 0, Vec::new());
        match spec.sample_set {
            SampleSet::Constant => {
                best = op.ratio(&vec![1.0; nb])?;
            }
            SampleSet::Random => {
                for s in 0..spec.samples {
                    let seed = spec.seed + 1_000_000 * level as u64 + s as u64;
                    let g = random_field(nb, seed);
                    let r = op.ratio(&g)?;
                    if r > best {
                        (best, best_seed, best_field) = (r, seed, g);
                    }
                }
                let mut g = best_field;
                for _ in 0..spec.boost_steps {
                    g = normalized(op.boost(&g));
                    best = best.max(op.ratio(&g)?);
                }
            }
        }
        rows.push(SweepRow {
            level,
            h: mesh.mesh_size(),
            n: mesh.n_nodes(),
            n_gamma: nb,
            max_ratio: best,
            argmax_seed: best_seed,
        });
    }
    Ok(rows)
}

/// max_ratio(level + 1) / max_ratio(level)
pub fn growth_factors(rows: &[SweepRow]) -> Vec<f64> {
    rows.windows(2).map(|w| w[1].max_ratio / w[0].max_ratio).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;
    use crate::model::Source;

    #[test]
    fn constant_dirichlet_ratio_on_disk() {
        let mesh = generate_disk_mesh(1.0, 0.2, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let r = dirichlet_ratio(&mesh, &vec![1.0; mesh.n_boundary()], &sys).unwrap();
        let expected = (mesh.bulk_measure() / mesh.boundary_measure()).sqrt();
        assert!((r - expected).abs() < 1e-9, "{r} vs {expected}");
        assert!((r - 0.5f64.sqrt()).abs() < 1e-3);
        assert_eq!(dirichlet_ratio(&mesh, &vec![0.0; mesh.n_boundary()], &sys).unwrap(), 0.0);
    }

    #[test]
    fn factored_and_iterative_routes_agree() {
        let mesh = generate_disk_mesh(1.0, 0.3, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.0, Source::Constant(0.0)).unwrap();
        let g = random_field(mesh.n_boundary(), 7);
        let d = RatioOperator::new(&mesh, Mode::Dirichlet).unwrap();
        assert!((d.ratio(&g).unwrap() - dirichlet_ratio(&mesh, &g, &sys).unwrap()).abs() < 1e-8);
        let r = RatioOperator::new(&mesh, Mode::Robin).unwrap();
        assert!((r.ratio(&g).unwrap() - robin_ratio(&mesh, &g, &sys, &p).unwrap()).abs() < 1e-8);
        let bad = ModelParams::new(2.0, 1.0, 0.0, Source::Constant(0.0)).unwrap();
        assert!(robin_ratio(&mesh, &g, &sys, &bad).is_err());
    }

    #[test]
    fn boosting_does_not_decrease_the_ratio() {
        let mesh = generate_disk_mesh(1.0, 0.3, 1).unwrap();
        for mode in [Mode::Dirichlet, Mode::Robin] {
            let op = RatioOperator::new(&mesh, mode).unwrap();
            let mut g = random_field(mesh.n_boundary(), 3);
            let mut prev = op.ratio(&g).unwrap();
            for _ in 0..10 {
                g = normalized(op.boost(&g));
                let r = op.ratio(&g).unwrap();
                assert!(r >= prev * (1.0 - 1e-10), "{mode:?}: {r} < {prev}");
                prev = r;
            }
        }
    }

    #[test]
    fn affine_trace_ratio() {
        // the harmonic extension of an affine trace is the affine function itself
        let mesh = generate_disk_mesh(1.0, 0.25, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let f = |p: &[f64; 3]| 0.5 + 2.0 * p[0] - p[1];
        let g: Vec<f64> = mesh.boundary_positions().iter().map(f).collect();
        let full: Vec<f64> = mesh.positions().iter().map(f).collect();
        let expected = norm_k(&full, &sys, Block::Bulk).unwrap() / norm_h_half(&g, &sys.mass_surf, &sys.stiff_surf).unwrap();
        assert!((dirichlet_ratio(&mesh, &g, &sys).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn sweep_rejects_small_inputs_and_constant_rows_are_flat() {
        let mut spec = SweepSpec::new(SweepGeometry::Disk { radius: 1.0 }, 2, 20, Mode::Dirichlet);
        assert!(stability_sweep(&spec).is_err());
        spec.levels = 3;
        spec.samples = 5;
        assert!(stability_sweep(&spec).is_err());
        spec.sample_set = SampleSet::Constant;
        spec.degree = 2;
        let rows = stability_sweep(&spec).unwrap();
        for r in &rows {
            assert!((r.max_ratio - 0.5f64.sqrt()).abs() < 0.03, "{r:?}");
        }
    }
}
