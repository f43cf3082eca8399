//! Finite element assembly of the bulk–surface matrices and load vectors.

mod field;
mod loads;

pub use field::NodalField;
pub use loads::{assemble_f_h, assemble_f_nu, assemble_f_u, curvature_norm_sq};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::{BulkSurfaceMesh, Topology};
use crate::model::ModelParams;
use crate::sparse::{CsrMatrix, SparseSym};

/// Sparsity patterns and element-to-value scatter maps of a topology.
#[derive(Debug)]
pub struct AssemblyPlans {
    bulk: CsrMatrix,
    bulk_slots: Vec<usize>,
    surf: CsrMatrix,
    surf_slots: Vec<usize>,
    /// Position in the bulk value array of each surface value.
    surf_in_bulk: Vec<usize>,
}

impl AssemblyPlans {
    fn build(topo: &Topology) -> Self {
        let (bulk, bulk_slots) = pattern(topo.n_nodes(), topo.n_elements(), |e| topo.element(e));
        let (surf, surf_slots) = pattern(topo.n_boundary(), topo.n_facets(), |f| topo.facet(f));
        let mut surf_in_bulk = Vec::with_capacity(surf.nnz());
        for r in 0..surf.nrows() {
            for &c in surf.row(r).0 {
                surf_in_bulk.push(bulk.find(r, c).expect("facet couplings lie in the bulk pattern"));
            }
        }
        Self {
            bulk,
            bulk_slots,
            surf,
            surf_slots,
            surf_in_bulk,
        }
    }

    pub(crate) fn of(topo: &Topology) -> &AssemblyPlans {
        topo.plans.get_or_init(|| AssemblyPlans::build(topo))
    }

    /// Value positions of surface entries inside the bulk pattern.
    pub(crate) fn surf_in_bulk(&self) -> &[usize] {
        &self.surf_in_bulk
    }
}

fn pattern<'a>(n: usize, n_cells: usize, cell: impl Fn(usize) -> &'a [usize]) -> (CsrMatrix, Vec<usize>) {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..n_cells {
        let nodes = cell(c);
        for &i in nodes {
            rows[i].extend_from_slice(nodes);
        }
    }
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    for row in rows.iter_mut() {
        row.sort_unstable();
        row.dedup();
        indices.extend_from_slice(row);
        indptr.push(indices.len());
    }
    let nnz = indices.len();
    let csr = CsrMatrix::from_raw(n, n, indptr, indices, vec![0.0; nnz]).expect("pattern is well formed");
    let mut slots = Vec::new();
    for c in 0..n_cells {
        let nodes = cell(c);
        for &i in nodes {
            for &j in nodes {
                slots.push(csr.find(i, j).unwrap());
            }
        }
    }
    (csr, slots)
}

/// All matrices of the matrix–vector formulation on one mesh configuration.
///
/// Boundary nodes come first, so the Γ-block of a bulk matrix is its leading
/// `n_boundary` rows and columns.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub mass_bulk: SparseSym,
    pub stiff_bulk: SparseSym,
    pub mass_surf: SparseSym,
    pub stiff_surf: SparseSym,
    /// D_ℓ for ℓ = 0..=m, each N_Γ x N_Γ with entries ∫ ψ_i (∇_Γ ψ_j)_ℓ.
    pub tangrad: Vec<CsrMatrix>,
    topo: Arc<Topology>,
}

impl SystemMatrices {
    pub fn assemble(mesh: &BulkSurfaceMesh) -> Result<Self> {
        let (mass_bulk, stiff_bulk) = assemble_bulk(mesh)?;
        let (mass_surf, stiff_surf, tangrad) = assemble_surface(mesh)?;
        Ok(Self {
            mass_bulk,
            stiff_bulk,
            mass_surf,
            stiff_surf,
            tangrad,
            topo: mesh.topology().clone(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.mass_bulk.dim()
    }

    pub fn n_boundary(&self) -> usize {
        self.mass_surf.dim()
    }

    /// L = A_Ω̄ + γᵀ(μ A_Γ + α M_Γ)γ.
    pub fn robin_operator(&self, alpha: f64, mu: f64) -> SparseSym {
        let mut l = self.stiff_bulk.as_csr().clone();
        let map = AssemblyPlans::of(&self.topo).surf_in_bulk();
        let (a, m) = (self.stiff_surf.values(), self.mass_surf.values());
        let vals = l.values_mut();
        for (k, &pos) in map.iter().enumerate() {
            vals[pos] += mu * a[k] + alpha * m[k];
        }
        SparseSym::new_unchecked(l)
    }

    /// Stacked tangential gradient matrix of size (m+1)·N_Γ x N_Γ.
    pub fn tangrad_stacked(&self) -> CsrMatrix {
        let nb = self.n_boundary();
        let mut trips = Vec::new();
        for (l, d) in self.tangrad.iter().enumerate() {
            for r in 0..nb {
                let (c, v) = d.row(r);
                trips.extend(c.iter().zip(v).map(|(&c, &v)| (l * nb + r, c, v)));
            }
        }
        CsrMatrix::from_triplets(self.tangrad.len() * nb, nb, &trips)
    }

    /// D applied to a surface scalar, component-major.
    pub fn apply_tangrad(&self, u_surf: &[f64]) -> NodalField {
        let nb = self.n_boundary();
        let mut values = Vec::with_capacity(nb * self.tangrad.len());
        for d in &self.tangrad {
            values.extend(d.matvec(u_surf));
        }
        NodalField::from_component_major(self.tangrad.len(), values)
    }

    /// A_ΩΩ
    pub fn stiff_interior(&self) -> SparseSym {
        let (nb, n) = (self.n_boundary(), self.n_nodes());
        SparseSym::new_unchecked(self.stiff_bulk.submatrix(nb..n, nb..n))
    }

    /// A_ΩΓ
    pub fn stiff_interior_boundary(&self) -> CsrMatrix {
        let (nb, n) = (self.n_boundary(), self.n_nodes());
        self.stiff_bulk.submatrix(nb..n, 0..nb)
    }

    /// K_Γ = A_Γ + M_Γ
    pub fn surface_h1(&self) -> SparseSym {
        SparseSym::new_unchecked(CsrMatrix::combine(&[(1.0, &self.stiff_surf), (1.0, &self.mass_surf)]))
    }

    /// K_Ω̄ = A_Ω̄ + M_Ω̄
    pub fn bulk_h1(&self) -> SparseSym {
        SparseSym::new_unchecked(CsrMatrix::combine(&[(1.0, &self.stiff_bulk), (1.0, &self.mass_bulk)]))
    }
}

/// Largest number of nodes on a bulk element (quadratic tetrahedron).
const MAX_NPE: usize = 10;

/// Bulk mass and stiffness matrices (M_Ω̄, A_Ω̄).
pub fn assemble_bulk(mesh: &BulkSurfaceMesh) -> Result<(SparseSym, SparseSym)> {
    let topo = mesh.topology();
    let plans = AssemblyPlans::of(topo);
    let r = topo.bulk_reference();
    let d = mesh.dim();
    let npe = r.n_nodes();
    debug_assert!(npe <= MAX_NPE);
    let mut mass = plans.bulk.zeros_like();
    let mut stiff = plans.bulk.zeros_like();
    let mut lm = [0.0; MAX_NPE * MAX_NPE];
    let mut lk = [0.0; MAX_NPE * MAX_NPE];
    let mut grads = [[0.0; 3]; MAX_NPE];
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e);
        lm.fill(0.0);
        lk.fill(0.0);
        for q in 0..r.n_quad() {
            let dphi = &r.dphi[q];
            let jac = mesh.jacobian(nodes, dphi, d);
            let (det, rows) = geom::metric(&jac, d, d);
            if !(det > 0.0) {
                return Err(Error::geometry(e, format!("non-positive Jacobian determinant {det:.3e}")));
            }
            let w = r.quadrature.weights[q] * det;
            // unused reference directions carry zero rows, so full 3x3 products are exact
            for (g, dp) in grads.iter_mut().zip(dphi.iter()) {
                for k in 0..3 {
                    g[k] = dp[0] * rows[0][k] + dp[1] * rows[1][k] + dp[2] * rows[2][k];
                }
            }
            let phi = &r.phi[q];
            for a in 0..npe {
                let (wa, ga) = (w * phi[a], grads[a]);
                let row = a * MAX_NPE;
                for b in a..npe {
                    let gb = &grads[b];
                    lm[row + b] += wa * phi[b];
                    lk[row + b] += w * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
                }
            }
        }
        let slots = &plans.bulk_slots[e * npe * npe..(e + 1) * npe * npe];
        let (mv, kv) = (mass.values_mut(), stiff.values_mut());
        for a in 0..npe {
            for b in 0..npe {
                let (i, j) = if a <= b { (a, b) } else { (b, a) };
                let pos = slots[a * npe + b];
                mv[pos] += lm[i * MAX_NPE + j];
                kv[pos] += lk[i * MAX_NPE + j];
            }
        }
    }
    Ok((SparseSym::new_unchecked(mass), SparseSym::new_unchecked(stiff)))
}

/// Surface mass, Laplace–Beltrami stiffness and tangential gradient blocks.
pub fn assemble_surface(mesh: &BulkSurfaceMesh) -> Result<(SparseSym, SparseSym, Vec<CsrMatrix>)> {
    let topo = mesh.topology();
    let plans = AssemblyPlans::of(topo);
    let r = topo.surface_reference();
    let (m, d) = (mesh.dim_m(), mesh.dim());
    let npf = r.n_nodes();
    let mut mass = plans.surf.zeros_like();
    let mut stiff = plans.surf.zeros_like();
    let mut tang: Vec<CsrMatrix> = (0..d).map(|_| plans.surf.zeros_like()).collect();
    let mut lm = vec![0.0; npf * npf];
    let mut lk = vec![0.0; npf * npf];
    let mut ld = vec![vec![0.0; npf * npf]; d];
    let mut grads = vec![[0.0; 3]; npf];
    for f in 0..mesh.n_facets() {
        let nodes = mesh.facet(f);
        lm.iter_mut().for_each(|v| *v = 0.0);
        lk.iter_mut().for_each(|v| *v = 0.0);
        ld.iter_mut().for_each(|b| b.iter_mut().for_each(|v| *v = 0.0));
        for q in 0..r.n_quad() {
            let jac = mesh.jacobian(nodes, &r.dphi[q], m);
            let (area, rows) = geom::metric(&jac, m, d);
            if !(area > 0.0) || !area.is_finite() {
                return Err(Error::geometry(f, "degenerate boundary facet"));
            }
            let w = r.quadrature.weights[q] * area;
            surface_gradients(&r.dphi[q], &rows, m, d, &mut grads);
            let phi = &r.phi[q];
            for a in 0..npf {
                for b in 0..npf {
                    let s = a * npf + b;
                    lm[s] += w * phi[a] * phi[b];
                    lk[s] += w * geom::dot(&grads[a], &grads[b]);
                    for (l, blk) in ld.iter_mut().enumerate() {
                        blk[s] += w * phi[a] * grads[b][l];
                    }
                }
            }
        }
        let slots = &plans.surf_slots[f * npf * npf..(f + 1) * npf * npf];
        for (s, &pos) in slots.iter().enumerate() {
            mass.values_mut()[pos] += lm[s];
            stiff.values_mut()[pos] += lk[s];
            for (l, t) in tang.iter_mut().enumerate() {
                t.values_mut()[pos] += ld[l][s];
            }
        }
    }
    Ok((SparseSym::new_unchecked(mass), SparseSym::new_unchecked(stiff), tang))
}

pub(crate) fn surface_gradients(dphi: &[[f64; 3]], rows: &geom::Cols, m: usize, d: usize, out: &mut [[f64; 3]]) {
    for (a, g) in out.iter_mut().enumerate() {
        *g = [0.0; 3];
        for k in 0..d {
            g[k] = (0..m).map(|c| dphi[a][c] * rows[c][k]).sum();
        }
    }
}

/// The Robin operator `L(x)` on `mesh`.
pub fn assemble_l(mesh: &BulkSurfaceMesh, params: &ModelParams) -> Result<SparseSym> {
    Ok(SystemMatrices::assemble(mesh)?.robin_operator(params.alpha, params.mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_ball_mesh, generate_disk_mesh};
    use std::f64::consts::PI;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn reference_triangle_mass() {
        let m = BulkSurfaceMesh::new(
            1,
            1,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            3,
            vec![0, 1, 2],
            vec![0, 1, 1, 2, 2, 0],
        )
        .unwrap();
        let (mass, stiff) = assemble_bulk(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.5 / 6.0 } else { 0.5 / 12.0 };
                assert!((mass.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert!(stiff.matvec(&ones(3)).iter().all(|v| v.abs() < 1e-14));
        // flat segment of length 1: [[1/3, 1/6], [1/6, 1/3]]
        let (ms, _, _) = assemble_surface(&m).unwrap();
        assert!((ms.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        let l2 = 2f64.sqrt();
        assert!((ms.get(1, 1) - (1.0 + l2) / 3.0).abs() < 1e-15);
        assert!((ms.get(1, 2) - l2 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kernels_and_measures() {
        for (mesh, dim) in [
            (generate_disk_mesh(1.0, 0.3, 2).unwrap(), 2),
            (generate_ball_mesh([1.0, 1.0, 1.0], 0.6, 2).unwrap(), 3),
        ] {
            let sys = SystemMatrices::assemble(&mesh).unwrap();
            let n = mesh.n_nodes();
            let nb = mesh.n_boundary();
            let a1 = sys.stiff_bulk.matvec(&ones(n));
            assert!(a1.iter().all(|v| v.abs() < 1e-12 * sys.stiff_bulk.max_abs()));
            let s1 = sys.stiff_surf.matvec(&ones(nb));
            assert!(s1.iter().all(|v| v.abs() < 1e-12 * sys.stiff_surf.max_abs()));
            let vol = sys.mass_bulk.bilinear(&ones(n), &ones(n));
            assert!((vol - mesh.bulk_measure()).abs() < 1e-12 * vol);
            let area = sys.mass_surf.bilinear(&ones(nb), &ones(nb));
            assert!((area - mesh.boundary_measure()).abs() < 1e-12 * area);
            for m in [&sys.mass_bulk, &sys.stiff_bulk, &sys.mass_surf, &sys.stiff_surf] {
                assert!(m.is_symmetric(1e-13));
            }
            assert_eq!(sys.tangrad.len(), dim);
            for d in &sys.tangrad {
                assert!(d.matvec(&ones(nb)).iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn disk_area_converges_at_geometric_order() {
        for (k, order) in [(1usize, 2.0), (2, 4.0)] {
            let errs: Vec<f64> = [0.4, 0.2, 0.1]
                .iter()
                .map(|&h| {
                    let mesh = generate_disk_mesh(1.0, h, k).unwrap();
                    let (m, _) = assemble_bulk(&mesh).unwrap();
                    (m.bilinear(&ones(mesh.n_nodes()), &ones(mesh.n_nodes())) - PI).abs()
                })
                .collect();
            let eoc = (errs[1] / errs[2]).log2();
            assert!((eoc - order).abs() < 0.3, "k={k}: {errs:?}");
        }
    }

    #[test]
    fn tangential_derivative_of_coordinate_integrates_to_zero() {
        let mesh = generate_disk_mesh(1.0, 0.2, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let w: Vec<f64> = mesh.boundary_positions().iter().map(|p| p[0]).collect();
        let d2 = sys.tangrad[1].matvec(&w);
        assert!(d2.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn galerkin_exact_for_linears() {
        let mesh = generate_disk_mesh(1.0, 0.35, 1).unwrap();
        let (_, a) = assemble_bulk(&mesh).unwrap();
        let u: Vec<f64> = mesh.positions().iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let w: Vec<f64> = mesh.positions().iter().map(|p| p[0] + 3.0 * p[1]).collect();
        let exact = (2.0 * 1.0 - 3.0) * mesh.bulk_measure();
        assert!((a.bilinear(&u, &w) - exact).abs() < 1e-12);
    }

    #[test]
    fn robin_operator_on_constants() {
        let mesh = generate_disk_mesh(1.0, 0.3, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let n = mesh.n_nodes();
        let area = mesh.boundary_measure();
        for alpha in [1.0, 2.0] {
            let l = sys.robin_operator(alpha, 1.0);
            assert!((l.bilinear(&ones(n), &ones(n)) - alpha * area).abs() < 1e-12);
        }
        let l = sys.robin_operator(1.0, 0.0);
        let l1 = l.matvec(&ones(n));
        let g = sys.mass_surf.matvec(&ones(mesh.n_boundary()));
        for i in 0..n {
            let want = if i < mesh.n_boundary() { g[i] } else { 0.0 };
            assert!((l1[i] - want).abs() < 1e-12);
        }
    }
}
