//! Closed-form radially symmetric solution for spheres in R^{m+1} with
//! μ = 0 and a constant source.

use serde::Serialize;

use crate::coupled::SimState;
use crate::error::{Error, Result};
use crate::fem::SystemMatrices;
use crate::geom::{self, Point};
use crate::mesh::BulkSurfaceMesh;
use crate::model::{ModelParams, Source};
use crate::sparse::{schur_dirichlet_solve, DEFAULT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialOracle {
    dim_m: usize,
    r0: f64,
    source: f64,
    alpha: f64,
    beta: f64,
}

/// Exact normal, mean curvature, normal speed and velocity at a boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryFields {
    pub normal: Point,
    pub curvature: f64,
    pub normal_speed: f64,
    pub velocity: Point,
}

impl RadialOracle {
    pub fn new(dim_m: usize, r0: f64, source: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(1..=2).contains(&dim_m) {
            return Err(Error::validation(format!("m must be 1 or 2, got {dim_m}")));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::validation(format!("initial radius must be positive, got {r0}")));
        }
        if !(alpha > 0.0 && beta > 0.0) || !source.is_finite() {
            return Err(Error::validation("oracle needs alpha, beta > 0 and a finite source"));
        }
        Ok(Self {
            dim_m,
            r0,
            source,
            alpha,
            beta,
        })
    }

    /// Oracle matching model parameters; requires μ = 0 and a constant source.
    pub fn from_params(dim_m: usize, r0: f64, params: &ModelParams) -> Result<Self> {
        if params.mu != 0.0 {
            return Err(Error::validation("the radial solution requires mu = 0"));
        }
        let q = match params.source {
            Source::Constant(q) => q,
            _ => params
                .source
                .as_constant()
                .ok_or_else(|| Error::validation("the radial solution requires a constant source"))?,
        };
        Self::new(dim_m, r0, q, params.alpha, params.beta)
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn initial_radius(&self) -> f64 {
        self.r0
    }

    fn mp1(&self) -> f64 {
        (self.dim_m + 1) as f64
    }

    /// R(t) = (R0 − (m+1)Q) e^{−t/(m+1)} + (m+1)Q
    pub fn radius(&self, t: f64) -> f64 {
        let k = self.mp1();
        (self.r0 - k * self.source) * (-t / k).exp() + k * self.source
    }

    /// R(t) / R0: the exact flow maps x0 to this multiple of x0.
    pub fn scale(&self, t: f64) -> f64 {
        self.radius(t) / self.r0
    }

    fn pressure_at(&self, r: f64, t: f64) -> f64 {
        let k = self.mp1();
        let big_r = self.radius(t);
        r * r / (2.0 * k) + (self.source + self.beta * self.dim_m as f64 / big_r - big_r / k) / self.alpha
            - big_r * big_r / (2.0 * k)
    }

    /// u(r, t) for 0 <= r <= R(t).
    pub fn pressure(&self, r: f64, t: f64) -> Result<f64> {
        let big_r = self.radius(t);
        if !(r >= 0.0) || r > big_r * (1.0 + 1e-8) {
            return Err(Error::Domain(format!("r = {r} outside [0, R(t) = {big_r}]")));
        }
        Ok(self.pressure_at(r, t))
    }

    /// V(t) = Q − R(t)/(m+1)
    pub fn normal_speed(&self, t: f64) -> f64 {
        self.source - self.radius(t) / self.mp1()
    }

    pub fn geometry_fields(&self, p: &Point, t: f64) -> Result<GeometryFields> {
        let big_r = self.radius(t);
        let r = geom::norm(p);
        if (r - big_r).abs() > 1e-8 * big_r {
            return Err(Error::validation(format!("point at radius {r} is not on the sphere of radius {big_r}")));
        }
        Ok(self.fields_unchecked(p, t))
    }

    fn fields_unchecked(&self, p: &Point, t: f64) -> GeometryFields {
        let big_r = self.radius(t);
        let normal = geom::scale(p, 1.0 / big_r);
        let v = self.normal_speed(t);
        GeometryFields {
            normal,
            curvature: self.dim_m as f64 / big_r,
            normal_speed: v,
            velocity: geom::scale(&normal, v),
        }
    }

    /// Exact positions at time t of the material points starting at `initial`.
    pub fn exact_positions(&self, initial: &[Point], t: f64) -> Vec<Point> {
        let s = self.scale(t);
        initial.iter().map(|p| geom::scale(p, s)).collect()
    }

    /// Exact nodal values at time t of the nodes that started at `initial`
    /// (the nodes of the initial sphere of radius R0).
    pub fn exact_state(&self, initial: &[Point], n_boundary: usize, t: f64) -> ExactNodal {
        let x = self.exact_positions(initial, t);
        let big_r = self.radius(t);
        let u = x.iter().map(|p| self.pressure_at(geom::norm(p).min(big_r), t)).collect();
        let fields: Vec<GeometryFields> = x[..n_boundary]
            .iter()
            .map(|p| {
                // nodes of curved elements sit exactly on the sphere up to rounding
                let p = geom::scale(p, big_r / geom::norm(p));
                self.fields_unchecked(&p, t)
            })
            .collect();
        ExactNodal {
            time: t,
            positions: x,
            pressure: u,
            normals: fields.iter().map(|f| f.normal).collect(),
            curvature: fields.iter().map(|f| f.curvature).collect(),
            normal_speed: fields.iter().map(|f| f.normal_speed).collect(),
            boundary_velocity: fields.iter().map(|f| f.velocity).collect(),
        }
    }

    /// Simulation state at time t from nodal interpolation of the exact
    /// solution on the mesh `initial` (a ball of radius R0) moved by the
    /// exact flow; interior velocity is the discrete harmonic extension of
    /// the exact boundary velocity.
    pub fn seed_state(&self, initial: &BulkSurfaceMesh, t: f64) -> Result<SimState> {
        if initial.dim_m() != self.dim_m {
            return Err(Error::validation("mesh dimension differs from the oracle dimension"));
        }
        for p in initial.boundary_positions() {
            if (geom::norm(p) - self.r0).abs() > 1e-8 * self.r0 {
                return Err(Error::validation(format!(
                    "boundary node at radius {} does not lie on the initial sphere of radius {}",
                    geom::norm(p),
                    self.r0
                )));
            }
        }
        let ex = self.exact_state(initial.positions(), initial.n_boundary(), t);
        let mesh = initial.displace(ex.positions.clone())?;
        let sys = SystemMatrices::assemble(&mesh)?;
        let velocity = harmonic_velocity(&sys, &ex.boundary_velocity, mesh.dim())?;
        Ok(SimState {
            time: t,
            positions: ex.positions,
            pressure: ex.pressure,
            normals: ex.normals,
            curvature: ex.curvature,
            velocity,
            normal_speed: ex.normal_speed,
        })
    }
}

fn harmonic_velocity(sys: &SystemMatrices, boundary: &[Point], d: usize) -> Result<Vec<Point>> {
    let n = sys.n_nodes();
    let nb = boundary.len();
    let mut v = vec![[0.0; 3]; n];
    for c in 0..d {
        let g: Vec<f64> = boundary.iter().map(|p| p[c]).collect();
        let full = schur_dirichlet_solve(&sys.stiff_bulk, &g, &vec![0.0; n - nb], DEFAULT_TOL)?;
        for (vi, x) in v.iter_mut().zip(full) {
            vi[c] = x;
        }
    }
    Ok(v)
}

/// Exact nodal values of all unknowns at one time.
#[derive(Clone, Debug)]
pub struct ExactNodal {
    pub time: f64,
    pub positions: Vec<Point>,
    pub pressure: Vec<f64>,
    pub normals: Vec<Point>,
    pub curvature: Vec<f64>,
    pub normal_speed: Vec<f64>,
    pub boundary_velocity: Vec<Point>,
}
