//! Invariant checks shared by the property suite and the acceptance target.

#![allow(dead_code)]

use std::sync::OnceLock;

use bulkgrow::coupled::{harmonic_extension, BulkSolvers};
use bulkgrow::mesh::{ball_mesh_with_cells, generate_disk_mesh};
use bulkgrow::norms::{norm_k, norm_m, Block, HalfNorm};
use bulkgrow::stability::{Mode, RatioOperator};
use bulkgrow::{BulkSurfaceMesh, ModelParams, Source, SparseSym, SystemMatrices};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub name: &'static str,
    pub mesh: BulkSurfaceMesh,
    pub sys: SystemMatrices,
    pub half: HalfNorm,
}

pub fn fixtures() -> &'static [Fixture] {
    static CELL: OnceLock<Vec<Fixture>> = OnceLock::new();
    CELL.get_or_init(|| {
        let meshes = vec![
            ("disk P1", generate_disk_mesh(1.0, 0.3, 1).unwrap()),
            ("disk P2", generate_disk_mesh(1.3, 0.45, 2).unwrap()),
            ("ball P1", ball_mesh_with_cells([1.0; 3], 2, 1).unwrap()),
            ("ellipsoid P2", ball_mesh_with_cells([0.5, 0.5, 1.0], 2, 2).unwrap()),
        ];
        meshes
            .into_iter()
            .map(|(name, mesh)| {
                let sys = SystemMatrices::assemble(&mesh).unwrap();
                let half = HalfNorm::new(sys.mass_surf.as_csr(), sys.stiff_surf.as_csr()).unwrap();
                Fixture { name, mesh, sys, half }
            })
            .collect()
    })
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn params(alpha: f64, mu: f64) -> ModelParams {
    ModelParams::new(alpha, 1.0, mu, Source::Constant(1.5)).unwrap()
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scaled_tol(a: &SparseSym) -> f64 {
    1e-12 * a.as_csr().max_abs().max(1.0)
}

/// Symmetric matrices; mass matrices and L positive definite, stiffness
/// matrices semidefinite, tested on the vector `x`.
pub fn symmetric_definite(f: &Fixture, seed: u64) -> Check {
    let s = &f.sys;
    let p = params(1.0, 0.1);
    let l = s.robin_operator(p.alpha, p.mu);
    for (name, a) in [("M", &s.mass_bulk), ("A", &s.stiff_bulk), ("M_G", &s.mass_surf), ("A_G", &s.stiff_surf), ("L", &l)] {
        let asym = a.as_csr().asymmetry();
        ensure(asym <= scaled_tol(a), || format!("{}: {name} asymmetry {asym:e}", f.name))?;
        let x = random_vec(a.dim(), seed);
        let q = a.as_csr().bilinear(&x, &x);
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let positive = matches!(name, "M" | "M_G" | "L");
        if positive {
            ensure(q > 0.0, || format!("{}: {name} not positive, x^T A x = {q:e}", f.name))?;
        } else {
            ensure(q >= -scaled_tol(a) * norm2, || format!("{}: {name} indefinite, x^T A x = {q:e}", f.name))?;
        }
    }
    Ok(())
}

/// Stiffness matrices annihilate constants.
pub fn constant_kernel(f: &Fixture) -> Check {
    for (name, a) in [("A", &f.sys.stiff_bulk), ("A_G", &f.sys.stiff_surf)] {
        let r = a.as_csr().matvec(&vec![1.0; a.dim()]);
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(worst <= 1e-10 * a.as_csr().max_abs(), || format!("{}: |{name} 1| = {worst:e}", f.name))?;
    }
    Ok(())
}

/// L x = A x + γᵀ(μ A_Γ + α M_Γ) γ x.
pub fn trace_compatibility(f: &Fixture, alpha: f64, mu: f64, seed: u64) -> Check {
    let s = &f.sys;
    let nb = s.n_boundary();
    let x = random_vec(s.n_nodes(), seed);
    let lx = s.robin_operator(alpha, mu).as_csr().matvec(&x);
    let mut expect = s.stiff_bulk.as_csr().matvec(&x);
    let ms = s.mass_surf.as_csr().matvec(&x[..nb]);
    let as_ = s.stiff_surf.as_csr().matvec(&x[..nb]);
    for i in 0..nb {
        expect[i] += alpha * ms[i] + mu * as_[i];
    }
    let worst = lx.iter().zip(&expect).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure(worst <= 1e-11 * (1.0 + alpha + mu), || format!("{}: L mismatch {worst:e}", f.name))
}

/// 1ᵀM1 equals the quadrature measures of the mesh.
pub fn measure_consistency(f: &Fixture) -> Check {
    let s = &f.sys;
    let vol = s.mass_bulk.as_csr().bilinear(&vec![1.0; s.n_nodes()], &vec![1.0; s.n_nodes()]);
    let area = s.mass_surf.as_csr().bilinear(&vec![1.0; s.n_boundary()], &vec![1.0; s.n_boundary()]);
    ensure((vol - f.mesh.bulk_measure()).abs() <= 1e-12 * vol, || format!("{}: volume {vol} vs {}", f.name, f.mesh.bulk_measure()))?;
    ensure((area - f.mesh.boundary_measure()).abs() <= 1e-12 * area, || {
        format!("{}: area {area} vs {}", f.name, f.mesh.boundary_measure())
    })
}

/// The discrete harmonic extension has the least energy among all fields
/// with the same trace.
pub fn harmonic_minimality(f: &Fixture, seed: u64, amplitude: f64) -> Check {
    let s = &f.sys;
    let (n, nb) = (s.n_nodes(), s.n_boundary());
    let g: Vec<[f64; 3]> = random_vec(nb, seed).into_iter().map(|v| [v, 0.0, 0.0]).collect();
    let mut solvers = BulkSolvers::default();
    let (ext, _) = harmonic_extension(s, &g, 1, &vec![[0.0; 3]; n], &mut solvers).map_err(|e| e.to_string())?;
    let u: Vec<f64> = ext.iter().map(|p| p[0]).collect();
    let energy = |v: &[f64]| s.stiff_bulk.as_csr().bilinear(v, v);
    let base = energy(&u);
    let w = random_vec(n, seed ^ 0x5eed);
    let perturbed: Vec<f64> = u.iter().zip(&w).enumerate().map(|(i, (a, b))| if i < nb { *a } else { a + amplitude * b }).collect();
    let other = energy(&perturbed);
    ensure(other >= base * (1.0 - 1e-10) - 1e-14, || format!("{}: energy {other:e} < harmonic {base:e}", f.name))
}

/// Positivity, homogeneity and the triangle inequality.
pub fn norm_axioms(f: &Fixture, seed: u64, c: f64) -> Check {
    let s = &f.sys;
    let (n, nb) = (s.n_nodes(), s.n_boundary());
    let (x, y) = (random_vec(n, seed), random_vec(n, seed.wrapping_add(1)));
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
    let norms: Vec<(&str, Box<dyn Fn(&[f64]) -> f64>)> = vec![
        ("M bulk", Box::new(|v: &[f64]| norm_m(v, s, Block::Bulk).unwrap())),
        ("K bulk", Box::new(|v: &[f64]| norm_k(v, s, Block::Bulk).unwrap())),
        ("M surface", Box::new(|v: &[f64]| norm_m(&v[..nb], s, Block::Surface).unwrap())),
        ("K surface", Box::new(|v: &[f64]| norm_k(&v[..nb], s, Block::Surface).unwrap())),
        ("H^1/2", Box::new(|v: &[f64]| f.half.norm(&v[..nb]))),
    ];
    for (name, norm) in &norms {
        let (nx, ny, ns, nc) = (norm(&x), norm(&y), norm(&sum), norm(&scaled));
        ensure(nx > 0.0 && norm(&vec![0.0; n]) == 0.0, || format!("{}: {name} positivity", f.name))?;
        ensure((nc - c.abs() * nx).abs() <= 1e-10 * (1.0 + nc), || format!("{}: {name} homogeneity {nc} vs {}", f.name, c.abs() * nx))?;
        ensure(ns <= nx + ny + 1e-12, || format!("{}: {name} triangle {ns} > {nx} + {ny}", f.name))?;
    }
    Ok(())
}

/// Stability ratios do not depend on the scale of the boundary field.
pub fn ratio_scale_invariance(f: &Fixture, op: &RatioOperator, seed: u64, c: f64) -> Check {
    let g = random_vec(f.sys.n_boundary(), seed);
    let gc: Vec<f64> = g.iter().map(|v| c * v).collect();
    let (a, b) = (op.ratio(&g).map_err(|e| e.to_string())?, op.ratio(&gc).map_err(|e| e.to_string())?);
    ensure((a - b).abs() <= 1e-8 * a, || format!("{}: ratio {a} vs scaled {b}", f.name))
}

pub fn ratio_operators() -> &'static [(RatioOperator, RatioOperator)] {
    static CELL: OnceLock<Vec<(RatioOperator, RatioOperator)>> = OnceLock::new();
    CELL.get_or_init(|| {
        fixtures()
            .iter()
            .map(|f| (RatioOperator::new(&f.mesh, Mode::Dirichlet).unwrap(), RatioOperator::new(&f.mesh, Mode::Robin).unwrap()))
            .collect()
    })
}

/// Moving every node by a rigid translation leaves all matrices unchanged.
pub fn translation_invariance(f: &Fixture, shift: [f64; 3]) -> Check {
    let d = f.mesh.dim();
    let moved: Vec<[f64; 3]> = f
        .mesh
        .positions()
        .iter()
        .map(|p| {
            let mut q = *p;
            for c in 0..d {
                q[c] += shift[c];
            }
            q
        })
        .collect();
    let m2 = f.mesh.displace(moved).map_err(|e| e.to_string())?;
    let s2 = SystemMatrices::assemble(&m2).map_err(|e| e.to_string())?;
    for (name, a, b) in [
        ("M", &f.sys.mass_bulk, &s2.mass_bulk),
        ("A", &f.sys.stiff_bulk, &s2.stiff_bulk),
        ("M_G", &f.sys.mass_surf, &s2.mass_surf),
        ("A_G", &f.sys.stiff_surf, &s2.stiff_surf),
    ] {
        let diff = a.as_csr().values().iter().zip(b.as_csr().values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ensure(diff <= 1e-10 * a.as_csr().max_abs(), || format!("{}: {name} changed by {diff:e} under translation", f.name))?;
    }
    Ok(())
}

/// Relative error of 1ᵀM1 against the exact volume and area for a sequence
/// of quadratic disk meshes; returns (h, volume error, area error).
pub fn disk_measure_errors(radius: f64) -> Vec<(f64, f64, f64)> {
    [0.6, 0.3, 0.15]
        .iter()
        .map(|&h| {
            let m = generate_disk_mesh(radius, h, 2).unwrap();
            let pi = std::f64::consts::PI;
            (
                m.mesh_size(),
                (m.bulk_measure() / (pi * radius * radius) - 1.0).abs(),
                (m.boundary_measure() / (2.0 * pi * radius) - 1.0).abs(),
            )
        })
        .collect()
}
