//! Matrix-induced norms and errors against the radial solution.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::coupled::SimState;
use crate::error::{Error, Result};
use crate::fem::SystemMatrices;
use crate::geom::Point;
use crate::model::ModelParams;
use crate::oracle::RadialOracle;
use crate::sparse::CsrMatrix;

/// Largest surface size accepted by the dense H^{1/2} evaluation.
pub const H_HALF_MAX_SIZE: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Bulk,
    Surface,
}

fn quadratic(m: &CsrMatrix, e: &[f64]) -> Result<f64> {
    if e.len() != m.nrows() {
        return Err(Error::validation(format!("field of length {} for a {}-dimensional space", e.len(), m.nrows())));
    }
    Ok(m.bilinear(e, e).max(0.0).sqrt())
}

/// √(eᵀ M e)
pub fn norm_m(field: &[f64], matrices: &SystemMatrices, which: Block) -> Result<f64> {
    match which {
        Block::Bulk => quadratic(&matrices.mass_bulk, field),
        Block::Surface => quadratic(&matrices.mass_surf, field),
    }
}

/// √(eᵀ (A + M) e)
pub fn norm_k(field: &[f64], matrices: &SystemMatrices, which: Block) -> Result<f64> {
    let (m, a) = match which {
        Block::Bulk => (&matrices.mass_bulk, &matrices.stiff_bulk),
        Block::Surface => (&matrices.mass_surf, &matrices.stiff_surf),
    };
    let sq = quadratic(m, field)?.powi(2) + quadratic(a, field)?.powi(2);
    Ok(sq.sqrt())
}

/// √(eᵀ L e) with L = A_Ω̄ + γᵀ(μ A_Γ + α M_Γ)γ.
pub fn norm_l(field: &[f64], matrices: &SystemMatrices, params: &ModelParams) -> Result<f64> {
    quadratic(&matrices.robin_operator(params.alpha, params.mu), field)
}

/// Surface K-norm of a vector field, summed over its `dim` components.
pub fn norm_k_vector(field: &[Point], dim: usize, matrices: &SystemMatrices) -> Result<f64> {
    let mut sq = 0.0;
    for c in 0..dim {
        let comp: Vec<f64> = field.iter().map(|p| p[c]).collect();
        sq += norm_k(&comp, matrices, Block::Surface)?.powi(2);
    }
    Ok(sq.sqrt())
}

/// Discrete H^{1/2}(Γ_h) interpolation norm: with A_Γ φ_i = λ_i M_Γ φ_i and
/// M-orthonormal φ_i, ‖g‖² = Σ (1 + λ_i)^{1/2} (φ_iᵀ M_Γ g)².
pub fn norm_h_half(g: &[f64], mass: &CsrMatrix, stiff: &CsrMatrix) -> Result<f64> {
    Ok(HalfNorm::new(mass, stiff)?.norm(g))
}

/// Precomputed eigenbasis for repeated H^{1/2} evaluations on one surface.
#[derive(Clone, Debug)]
pub struct HalfNorm {
    /// Columns are M-orthonormal eigenvectors.
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    mass: DMatrix<f64>,
}

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let (c, v) = m.row(r);
        for (&c, &v) in c.iter().zip(v) {
            d[(r, c)] = v;
        }
    }
    d
}

impl HalfNorm {
    pub fn new(mass: &CsrMatrix, stiff: &CsrMatrix) -> Result<Self> {
        let n = mass.nrows();
        if n > H_HALF_MAX_SIZE {
            return Err(Error::Resource(format!(
                "H^1/2 norm needs a dense eigensolve; surface size {n} exceeds {H_HALF_MAX_SIZE}"
            )));
        }
        let md = dense(mass);
        let ad = dense(stiff);
        // M = C Cᵀ, then C⁻¹ A C⁻ᵀ y = λ y and φ = C⁻ᵀ y
        let chol = md
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
        let c = chol.l();
        let x = c
            .solve_lower_triangular(&ad)
            .ok_or_else(|| Error::validation("singular mass factor"))?;
        let s = c
            .solve_lower_triangular(&x.transpose())
            .ok_or_else(|| Error::validation("singular mass factor"))?;
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let basis = c
            .transpose()
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(|| Error::validation("singular mass factor"))?;
        Ok(Self {
            basis,
            eigenvalues: eig.eigenvalues.map(|l| l.max(0.0)),
            mass: md,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// M-orthonormal eigenvector `i`.
    pub fn mode(&self, i: usize) -> Vec<f64> {
        self.basis.column(i).iter().copied().collect()
    }

    pub fn norm(&self, g: &[f64]) -> f64 {
        let g = DVector::from_column_slice(g);
        let coeffs = self.basis.transpose() * (&self.mass * g);
        coeffs
            .iter()
            .zip(self.eigenvalues.iter())
            .map(|(c, l)| (1.0 + l).sqrt() * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// G⁻¹ r = Φ diag((1+λ)^{-1/2}) Φᵀ r for the Gram matrix below.
    pub fn apply_gram_inverse(&self, r: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(r);
        let mut c = self.basis.transpose() * r;
        for (ci, l) in c.iter_mut().zip(self.eigenvalues.iter()) {
            *ci /= (1.0 + l).sqrt();
        }
        (&self.basis * c).iter().copied().collect()
    }

    /// Gram matrix of the H^{1/2} inner product, M Φ diag((1+λ)^{1/2}) Φᵀ M.
    pub fn gram(&self) -> DMatrix<f64> {
        let mp = &self.mass * &self.basis;
        let w = self.eigenvalues.map(|l| (1.0 + l).sqrt());
        let scaled = DMatrix::from_fn(mp.nrows(), mp.ncols(), |i, j| mp[(i, j)] * w[j]);
        &scaled * mp.transpose()
    }
}

/// Errors of one state against the exact solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorSample {
    pub time: f64,
    /// u in the L-norm.
    pub u: f64,
    /// x_Γ in the surface K-norm.
    pub x: f64,
    /// v_Γ in the surface K-norm.
    pub v: f64,
    /// ν in the surface K-norm.
    pub nu: f64,
    /// H in the surface K-norm.
    pub h: f64,
}

impl ErrorSample {
    fn max(self, o: &ErrorSample) -> ErrorSample {
        ErrorSample {
            time: self.time.max(o.time),
            u: self.u.max(o.u),
            x: self.x.max(o.x),
            v: self.v.max(o.v),
            nu: self.nu.max(o.nu),
            h: self.h.max(o.h),
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [self.u, self.x, self.v, self.nu, self.h]
    }

    pub const QUANTITIES: [&'static str; 5] = ["u", "x", "v", "nu", "H"];
}

/// Time series of errors for one (h, τ) run with L∞-in-time maxima.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub tau: f64,
    pub q: usize,
    pub params: ModelParams,
    pub samples: Vec<ErrorSample>,
}

impl ErrorReport {
    pub fn new(h: f64, tau: f64, q: usize, params: ModelParams) -> Self {
        Self {
            h,
            tau,
            q,
            params,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, s: ErrorSample) {
        self.samples.push(s);
    }

    /// Maximum over all samples of every quantity (time field = last time).
    pub fn max_in_time(&self) -> ErrorSample {
        self.samples.iter().fold(ErrorSample::default(), |a, s| a.max(s))
    }
}

/// Errors between `state` and the nodal values of the exact solution at the
/// exact positions of the same material nodes (`initial` are the positions at
/// t = 0). Norms use matrices of the numerical configuration.
pub fn error_vs_oracle(
    state: &SimState,
    initial: &[Point],
    oracle: &RadialOracle,
    matrices: &SystemMatrices,
    params: &ModelParams,
) -> Result<ErrorSample> {
    let nb = state.normals.len();
    let d = oracle.dim_m() + 1;
    let ex = oracle.exact_state(initial, nb, state.time);
    let diff_s = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
    let diff_p = |a: &[Point], b: &[Point]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| [x[0] - y[0], x[1] - y[1], x[2] - y[2]])
            .collect::<Vec<Point>>()
    };
    Ok(ErrorSample {
        time: state.time,
        u: norm_l(&diff_s(&state.pressure, &ex.pressure), matrices, params)?,
        x: norm_k_vector(&diff_p(&state.positions[..nb], &ex.positions[..nb]), d, matrices)?,
        v: norm_k_vector(&diff_p(&state.velocity[..nb], &ex.boundary_velocity), d, matrices)?,
        nu: norm_k_vector(&diff_p(&state.normals, &ex.normals), d, matrices)?,
        h: norm_k(&diff_s(&state.curvature, &ex.curvature), matrices, Block::Surface)?,
    })
}
