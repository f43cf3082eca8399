//! Lagrange simplices of degree 1 and 2 with their quadrature tables.
//!
//! Local node order is vertices first, then edge midpoints in the order of
//! [`edges`]: `(0,1)` for segments; `(0,1), (1,2), (2,0)` for triangles;
//! `(0,1), (1,2), (2,0), (0,3), (1,3), (2,3)` for tetrahedra. This matches the
//! VTK quadratic cell conventions.

const SEGMENT_EDGES: [(usize, usize); 1] = [(0, 1)];
const TRIANGLE_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
const TETRA_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)];

/// Edges of the reference simplex of dimension `dim`, as local vertex pairs.
pub fn edges(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        1 => &SEGMENT_EDGES,
        2 => &TRIANGLE_EDGES,
        3 => &TETRA_EDGES,
        _ => panic!("unsupported simplex dimension {dim}"),
    }
}

/// Number of Lagrange nodes on a simplex of dimension `dim` and degree `degree`.
pub fn node_count(dim: usize, degree: usize) -> usize {
    match degree {
        1 => dim + 1,
        2 => dim + 1 + edges(dim).len(),
        _ => panic!("unsupported degree {degree}"),
    }
}

/// Measure of the reference simplex (1, 1/2, 1/6).
pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => panic!("unsupported simplex dimension {dim}"),
    }
}

/// A quadrature rule on the reference simplex, points in reference coordinates.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Rule exact for polynomials of total degree `2 * degree` (degree 4 at most).
    /// Segments always use 3-point Gauss.
    pub fn for_degree(dim: usize, degree: usize) -> Self {
        match (dim, degree) {
            (1, _) => gauss_segment_3(),
            (2, 1) => triangle_deg2(),
            (2, _) => triangle_deg4(),
            (3, 1) => tetra_deg2(),
            (3, _) => tetra_deg4(),
            _ => panic!("unsupported simplex dimension {dim}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn from_barycentric(bary: &[[f64; 4]], weights: &[f64], dim: usize) -> Quadrature {
    let points = bary
        .iter()
        .map(|b| {
            let mut p = [0.0; 3];
            p[..dim].copy_from_slice(&b[1..(dim + 1)]);
            p
        })
        .collect();
    Quadrature {
        points,
        weights: weights.to_vec(),
    }
}

fn gauss_segment_3() -> Quadrature {
    let d = 0.5 * (0.6f64).sqrt();
    Quadrature {
        points: vec![[0.5 - d, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5 + d, 0.0, 0.0]],
        weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
    }
}

fn triangle_deg2() -> Quadrature {
    let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
    from_barycentric(
        &[[a, b, b, 0.0], [b, a, b, 0.0], [b, b, a, 0.0]],
        &[1.0 / 6.0; 3],
        2,
    )
}

// Dunavant, 6 points.
fn triangle_deg4() -> Quadrature {
    let a1 = 0.445_948_490_915_964_886_32;
    let w1 = 0.223_381_589_678_011_465_70 / 2.0;
    let a2 = 0.091_576_213_509_770_743_46;
    let w2 = 0.109_951_743_655_321_867_64 / 2.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    from_barycentric(
        &[
            [b1, a1, a1, 0.0],
            [a1, b1, a1, 0.0],
            [a1, a1, b1, 0.0],
            [b2, a2, a2, 0.0],
            [a2, b2, a2, 0.0],
            [a2, a2, b2, 0.0],
        ],
        &[w1, w1, w1, w2, w2, w2],
        2,
    )
}

fn tetra_deg2() -> Quadrature {
    let s5 = 5f64.sqrt();
    let a = (5.0 - s5) / 20.0;
    let b = (5.0 + 3.0 * s5) / 20.0;
    from_barycentric(
        &[[b, a, a, a], [a, b, a, a], [a, a, b, a], [a, a, a, b]],
        &[1.0 / 24.0; 4],
        3,
    )
}

// Keast, 11 points (one negative weight).
fn tetra_deg4() -> Quadrature {
    let mut bary = vec![[0.25; 4]];
    let mut weights = vec![-74.0 / 5625.0];
    let (a, b) = (1.0 / 14.0, 11.0 / 14.0);
    for i in 0..4 {
        let mut p = [a; 4];
        p[i] = b;
        bary.push(p);
        weights.push(343.0 / 45000.0);
    }
    let r = (5.0f64 / 14.0).sqrt();
    let (c, d) = ((1.0 + r) / 4.0, (1.0 - r) / 4.0);
    for &(i, j) in &TETRA_EDGES {
        let mut p = [d; 4];
        p[i] = c;
        p[j] = c;
        bary.push(p);
        weights.push(56.0 / 2250.0);
    }
    from_barycentric(&bary, &weights, 3)
}

/// Barycentric coordinates of a reference point.
fn barycentric(dim: usize, xi: &[f64; 3]) -> [f64; 4] {
    let mut l = [0.0; 4];
    l[0] = 1.0 - xi[..dim].iter().sum::<f64>();
    l[1..(dim + 1)].copy_from_slice(&xi[..dim]);
    l
}

/// Gradient of barycentric coordinate `i` with respect to reference coordinates.
fn barycentric_grad(dim: usize, i: usize) -> [f64; 3] {
    let mut g = [0.0; 3];
    if i == 0 {
        g[..dim].iter_mut().for_each(|v| *v = -1.0);
    } else {
        g[i - 1] = 1.0;
    }
    g
}

/// Shape function values and reference gradients at an arbitrary reference point.
pub fn shape_functions(dim: usize, degree: usize, xi: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let l = barycentric(dim, xi);
    let dl: Vec<[f64; 3]> = (0..=dim).map(|i| barycentric_grad(dim, i)).collect();
    let n = node_count(dim, degree);
    let mut val = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    match degree {
        1 => {
            for i in 0..=dim {
                val.push(l[i]);
                grad.push(dl[i]);
            }
        }
        2 => {
            for i in 0..=dim {
                val.push(l[i] * (2.0 * l[i] - 1.0));
                let s = 4.0 * l[i] - 1.0;
                grad.push([s * dl[i][0], s * dl[i][1], s * dl[i][2]]);
            }
            for &(i, j) in edges(dim) {
                val.push(4.0 * l[i] * l[j]);
                let mut g = [0.0; 3];
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc = 4.0 * (l[j] * dl[i][c] + l[i] * dl[j][c]);
                }
                grad.push(g);
            }
        }
        _ => panic!("unsupported degree {degree}"),
    }
    (val, grad)
}

/// Reference simplex with shape tables evaluated at its quadrature points.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub dim: usize,
    pub degree: usize,
    /// Local node coordinates in the reference simplex.
    pub nodes: Vec<[f64; 3]>,
    pub quadrature: Quadrature,
    /// `phi[q][a]`: shape function `a` at quadrature point `q`.
    pub phi: Vec<Vec<f64>>,
    /// `dphi[q][a]`: reference gradient of shape function `a` at point `q`.
    pub dphi: Vec<Vec<[f64; 3]>>,
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize) -> Self {
        let quadrature = Quadrature::for_degree(dim, degree);
        let mut nodes: Vec<[f64; 3]> = (0..=dim)
            .map(|i| {
                let mut p = [0.0; 3];
                if i > 0 {
                    p[i - 1] = 1.0;
                }
                p
            })
            .collect();
        if degree == 2 {
            let verts = nodes.clone();
            for &(i, j) in edges(dim) {
                nodes.push([
                    0.5 * (verts[i][0] + verts[j][0]),
                    0.5 * (verts[i][1] + verts[j][1]),
                    0.5 * (verts[i][2] + verts[j][2]),
                ]);
            }
        }
        let (phi, dphi) = quadrature
            .points
            .iter()
            .map(|p| shape_functions(dim, degree, p))
            .unzip();
        Self {
            dim,
            degree,
            nodes,
            quadrature,
            phi,
            dphi,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_quad(&self) -> usize {
        self.quadrature.len()
    }
}
