//! Preconditioned conjugate gradients.

use super::{dot, norm2, CsrMatrix, SparseSym};
use crate::error::{Error, Result};

/// Default relative residual tolerance for every implicit solve.
pub const DEFAULT_TOL: f64 = 1e-11;

pub trait Preconditioner {
    /// z = P^{-1} r
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal scaling.
#[derive(Clone, Debug)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final ||b - Ax|| / ||b||.
    pub residual: f64,
}

fn iteration_cap(n: usize) -> usize {
    (50.0 * (n as f64).sqrt()).ceil().max(1.0) as usize
}

/// Solve `A x = b` to `||Ax - b|| <= tol ||b||` with Jacobi-preconditioned CG
/// from a zero initial guess.
pub fn solve_spd(a: &SparseSym, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    pcg(a, b, &mut x, &Jacobi::new(a), tol)?;
    Ok(x)
}

/// PCG starting from the contents of `x`. Fails with
/// [`Error::NonConvergence`] after `50 sqrt(n)` iterations.
pub fn pcg(a: &SparseSym, b: &[f64], x: &mut [f64], precond: &dyn Preconditioner, tol: f64) -> Result<SolveStats> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::validation(format!("system of size {n} with rhs {} and guess {}", b.len(), x.len())));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::validation(format!("tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let target = tol * bnorm;
    let mut r = vec![0.0; n];
    a.matvec_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rnorm = norm2(&r);
    if rnorm <= target {
        return Ok(SolveStats {
            iterations: 0,
            residual: rnorm / bnorm,
        });
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = iteration_cap(n);
    let mut restarts = 0;
    for it in 1..=cap {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm2(&r);
        if rnorm <= target {
            // confirm against the true residual; recurrence drift can fake convergence
            a.matvec_into(x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rnorm = norm2(&r);
            if rnorm <= target {
                return Ok(SolveStats {
                    iterations: it,
                    residual: rnorm / bnorm,
                });
            }
            restarts += 1;
            if restarts > 3 {
                break;
            }
            precond.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: rnorm / bnorm,
    })
}

/// Solve the Dirichlet-partitioned system: the first `g_boundary.len()`
/// unknowns are fixed to `g_boundary` and the rest satisfy
/// `A_OO v_O = rhs_interior - A_OG g`.
pub fn schur_dirichlet_solve(a: &SparseSym, g_boundary: &[f64], rhs_interior: &[f64], tol: f64) -> Result<Vec<f64>> {
    let nb = g_boundary.len();
    let n = a.dim();
    if nb > n || rhs_interior.len() != n - nb {
        return Err(Error::validation("boundary/interior sizes do not partition the system"));
    }
    let a_oo = SparseSym::new_unchecked(a.submatrix(nb..n, nb..n));
    let a_og = a.submatrix(nb..n, 0..nb);
    let coupling = a_og.matvec(g_boundary);
    let rhs: Vec<f64> = rhs_interior.iter().zip(&coupling).map(|(r, c)| r - c).collect();
    let interior = if n > nb { solve_spd(&a_oo, &rhs, tol)? } else { Vec::new() };
    let mut v = g_boundary.to_vec();
    v.extend(interior);
    Ok(v)
}
