//! Exact closed surfaces used to curve boundary elements and to seed the
//! geometric fields (normal, mean curvature) at generated meshes.

use crate::geom::Point;

/// An axis-aligned ellipse (dim 2) or ellipsoid (dim 3) centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSurface {
    radii: [f64; 3],
    dim: usize,
}

impl ExactSurface {
    pub fn circle(radius: f64) -> Self {
        Self {
            radii: [radius, radius, 1.0],
            dim: 2,
        }
    }

    pub fn sphere(radius: f64) -> Self {
        Self {
            radii: [radius; 3],
            dim: 3,
        }
    }

    pub fn ellipsoid(radii: [f64; 3]) -> Self {
        Self { radii, dim: 3 }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self {
            radii: [a, b, 1.0],
            dim: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self) -> [f64; 3] {
        self.radii
    }

    fn level(&self, p: &Point) -> f64 {
        (0..self.dim).map(|c| (p[c] / self.radii[c]).powi(2)).sum::<f64>()
    }

    /// Radial projection onto the surface (exact closest point for spheres).
    pub fn project(&self, p: &Point) -> Point {
        let s = self.level(p).sqrt();
        let mut out = [0.0; 3];
        for c in 0..self.dim {
            out[c] = p[c] / s;
        }
        out
    }

    /// Outward unit normal of the level set through `p`.
    pub fn normal(&self, p: &Point) -> Point {
        let mut g = [0.0; 3];
        for c in 0..self.dim {
            g[c] = p[c] / (self.radii[c] * self.radii[c]);
        }
        let len = crate::geom::norm(&g);
        [g[0] / len, g[1] / len, g[2] / len]
    }

    /// Mean curvature (sum of principal curvatures, positive for convex
    /// surfaces with outward normal) of the level set through `p`.
    pub fn mean_curvature(&self, p: &Point) -> f64 {
        // H = div(grad f / |grad f|) = (|g|^2 tr(Hess) - g^T Hess g) / |g|^3
        let mut g2 = 0.0;
        let mut tr = 0.0;
        let mut ghg = 0.0;
        for c in 0..self.dim {
            let hc = 2.0 / (self.radii[c] * self.radii[c]);
            let gc = hc * p[c];
            g2 += gc * gc;
            tr += hc;
            ghg += hc * gc * gc;
        }
        (g2 * tr - ghg) / g2.powf(1.5)
    }
}
