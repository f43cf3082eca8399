//! Load vectors of the Robin problem and of the normal / curvature equations.

use super::{surface_gradients, NodalField, SystemMatrices};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::BulkSurfaceMesh;
use crate::model::ModelParams;

/// f_u = −M_Ω̄ 1 + γᵀ M_Γ (β H + Q(x_i, t)).
pub fn assemble_f_u(
    mesh: &BulkSurfaceMesh,
    matrices: &SystemMatrices,
    curvature: &[f64],
    params: &ModelParams,
    t: f64,
) -> Result<Vec<f64>> {
    let nb = mesh.n_boundary();
    if curvature.len() != nb {
        return Err(Error::validation(format!("curvature has {} values, boundary has {nb}", curvature.len())));
    }
    let ones = vec![1.0; mesh.n_nodes()];
    let mut f: Vec<f64> = matrices.mass_bulk.matvec(&ones).into_iter().map(|v| -v).collect();
    let g: Vec<f64> = mesh
        .boundary_positions()
        .iter()
        .zip(curvature)
        .map(|(p, h)| params.beta * h + params.source.eval(p, t))
        .collect();
    for (fi, v) in f.iter_mut().zip(matrices.mass_surf.matvec(&g)) {
        *fi += v;
    }
    Ok(f)
}

/// |A_h|² with A_h the symmetric part of the tangential gradient of ν_h.
pub fn curvature_norm_sq(grad_nu: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            let a = 0.5 * (grad_nu[i][k] + grad_nu[k][i]);
            s += a * a;
        }
    }
    s
}

/// Visit every surface quadrature point with
/// `(facet nodes, shape values, weight, |A_h|², ν_h)`.
fn for_each_surface_point(
    mesh: &BulkSurfaceMesh,
    normals: &[Point],
    mut visit: impl FnMut(&[usize], &[f64], f64, f64, &Point),
) -> Result<()> {
    if normals.len() != mesh.n_boundary() {
        return Err(Error::validation(format!(
            "normal field has {} values, boundary has {}",
            normals.len(),
            mesh.n_boundary()
        )));
    }
    let r = mesh.topology().surface_reference();
    let (m, d) = (mesh.dim_m(), mesh.dim());
    let mut grads = vec![[0.0; 3]; r.n_nodes()];
    for f in 0..mesh.n_facets() {
        let nodes = mesh.facet(f);
        for q in 0..r.n_quad() {
            let jac = mesh.jacobian(nodes, &r.dphi[q], m);
            let (area, rows) = geom::metric(&jac, m, d);
            if !(area > 0.0) {
                return Err(Error::geometry(f, "degenerate boundary facet"));
            }
            surface_gradients(&r.dphi[q], &rows, m, d, &mut grads);
            let phi = &r.phi[q];
            let mut nu = [0.0; 3];
            let mut grad_nu = [[0.0; 3]; 3];
            for (a, &node) in nodes.iter().enumerate() {
                let n = &normals[node];
                for i in 0..d {
                    nu[i] += phi[a] * n[i];
                    for k in 0..d {
                        grad_nu[i][k] += n[i] * grads[a][k];
                    }
                }
            }
            visit(nodes, phi, r.quadrature.weights[q] * area, curvature_norm_sq(&grad_nu), &nu);
        }
    }
    Ok(())
}

/// f_ν|_{j,ℓ} = β ∫ |A_h|² (ν_h)_ℓ ψ_j, component-major.
pub fn assemble_f_nu(mesh: &BulkSurfaceMesh, normals: &[Point], beta: f64) -> Result<NodalField> {
    let (nb, d) = (mesh.n_boundary(), mesh.dim());
    let mut out = vec![0.0; nb * d];
    for_each_surface_point(mesh, normals, |nodes, phi, w, a2, nu| {
        for (a, &j) in nodes.iter().enumerate() {
            let s = beta * w * a2 * phi[a];
            for l in 0..d {
                out[l * nb + j] += s * nu[l];
            }
        }
    })?;
    Ok(NodalField::from_component_major(d, out))
}

/// f_H|_j = −∫ |A_h|² V_h ψ_j.
pub fn assemble_f_h(mesh: &BulkSurfaceMesh, normals: &[Point], normal_speed: &[f64]) -> Result<Vec<f64>> {
    let nb = mesh.n_boundary();
    if normal_speed.len() != nb {
        return Err(Error::validation("normal speed length differs from boundary size"));
    }
    let mut out = vec![0.0; nb];
    for_each_surface_point(mesh, normals, |nodes, phi, w, a2, _| {
        let v: f64 = nodes.iter().zip(phi).map(|(&j, p)| normal_speed[j] * p).sum();
        for (a, &j) in nodes.iter().enumerate() {
            out[j] -= w * a2 * v * phi[a];
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_ball_mesh, generate_disk_mesh};
    use crate::model::Source;

    fn exact_normals(mesh: &BulkSurfaceMesh) -> Vec<Point> {
        mesh.boundary_positions().iter().map(|p| geom::scale(p, 1.0 / geom::norm(p))).collect()
    }

    #[test]
    fn constant_normal_gives_zero_forcing() {
        let mesh = generate_disk_mesh(1.0, 0.3, 2).unwrap();
        let n = vec![[0.3, 0.4, 0.0]; mesh.n_boundary()];
        assert!(assemble_f_nu(&mesh, &n, 1.0).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let v = vec![2.0; mesh.n_boundary()];
        assert!(assemble_f_h(&mesh, &n, &v).unwrap().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn sphere_curvature_norm_is_two() {
        let mesh = generate_ball_mesh([1.0; 3], 0.35, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let n = exact_normals(&mesh);
        let nb = mesh.n_boundary();
        let c = 0.7;
        let fh = assemble_f_h(&mesh, &n, &vec![c; nb]).unwrap();
        let m1 = sys.mass_surf.matvec(&vec![1.0; nb]);
        let err: f64 = fh.iter().zip(&m1).map(|(f, m)| (f + 2.0 * c * m).abs()).sum::<f64>();
        let scale: f64 = m1.iter().sum::<f64>() * 2.0 * c;
        assert!(err / scale < 2e-2, "{}", err / scale);
        // f_ν ≈ 2β M_Γ n
        let fnu = assemble_f_nu(&mesh, &n, 1.5).unwrap();
        let packed = NodalField::from_points(&n, 3);
        let mut num = 0.0;
        let mut den = 0.0;
        for l in 0..3 {
            let mn = sys.mass_surf.matvec(packed.component(l));
            for (f, m) in fnu.component(l).iter().zip(&mn) {
                num += (f - 3.0 * m).powi(2);
                den += (3.0 * m).powi(2);
            }
        }
        assert!((num / den).sqrt() < 2e-2);
    }

    #[test]
    fn circle_curvature_norm_is_one() {
        let mesh = generate_disk_mesh(1.0, 0.1, 2).unwrap();
        let n = exact_normals(&mesh);
        let nb = mesh.n_boundary();
        let fh = assemble_f_h(&mesh, &n, &vec![1.0; nb]).unwrap();
        let total: f64 = fh.iter().sum();
        assert!((total + mesh.boundary_measure()).abs() < 1e-4 * mesh.boundary_measure());
    }

    #[test]
    fn f_u_sums() {
        let mesh = generate_ball_mesh([1.5; 3], 0.5, 2).unwrap();
        let sys = SystemMatrices::assemble(&mesh).unwrap();
        let nb = mesh.n_boundary();
        let zero = ModelParams::new(1.0, 1.0, 0.0, Source::Constant(0.0)).unwrap();
        let f = assemble_f_u(&mesh, &sys, &vec![0.0; nb], &zero, 0.0).unwrap();
        assert!((f.iter().sum::<f64>() + mesh.bulk_measure()).abs() < 1e-12);
        let p = ModelParams::new(1.0, 1.0, 0.0, Source::Constant(1.5)).unwrap();
        let h = vec![2.0 / 1.5; nb];
        let f = assemble_f_u(&mesh, &sys, &h, &p, 0.0).unwrap();
        let want = -mesh.bulk_measure() + (4.0 / 3.0 + 1.5) * mesh.boundary_measure();
        assert!((f.iter().sum::<f64>() - want).abs() < 1e-11);
        // linear in H
        let h2: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
        let f2 = assemble_f_u(&mesh, &sys, &h2, &p, 0.0).unwrap();
        let mh = sys.mass_surf.matvec(&h);
        for i in 0..nb {
            assert!((f2[i] - f[i] - mh[i]).abs() < 1e-12);
        }
    }
}
