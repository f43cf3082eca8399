//! Small fixed-size helpers for points in R^2 / R^3 (stored as `[f64; 3]`).

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn midpoint(a: &Point, b: &Point) -> Point {
    scale(&add(a, b), 0.5)
}

/// Column-major small matrix: `cols[j]` is column j, rows are ambient coordinates.
pub type Cols = [[f64; 3]; 3];

/// Determinant of the leading `d x d` block.
pub fn det(j: &Cols, d: usize) -> f64 {
    match d {
        1 => j[0][0],
        2 => j[0][0] * j[1][1] - j[1][0] * j[0][1],
        3 => dot(&j[0], &cross(&j[1], &j[2])),
        _ => unreachable!(),
    }
}

/// Given the Jacobian columns `j` of a map from R^r to R^d (r <= d), return
/// `(measure factor, pseudo-inverse rows)` such that the physical (tangential)
/// gradient of a function with reference gradient `g` is `sum_c g[c] * rows[c]`.
///
/// For r == d the measure factor is the signed determinant; otherwise it is
/// `sqrt(det(J^T J))`.
pub fn metric(j: &Cols, r: usize, d: usize) -> (f64, Cols) {
    // G = J^T J (r x r), rows = G^{-1} J^T  ->  grad = J G^{-1} g
    let mut g = [[0.0; 3]; 3];
    for a in 0..r {
        for b in 0..r {
            g[a][b] = dot(&j[a], &j[b]);
        }
    }
    let ginv = inverse_sym(&g, r);
    let mut rows = [[0.0; 3]; 3];
    for a in 0..r {
        for b in 0..r {
            for k in 0..d {
                rows[a][k] += ginv[a][b] * j[b][k];
            }
        }
    }
    let factor = if r == d {
        det(j, d)
    } else {
        let dg = match r {
            1 => g[0][0],
            2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
            _ => unreachable!(),
        };
        dg.max(0.0).sqrt()
    };
    (factor, rows)
}

fn inverse_sym(g: &Cols, r: usize) -> Cols {
    let mut inv = [[0.0; 3]; 3];
    match r {
        1 => inv[0][0] = 1.0 / g[0][0],
        2 => {
            let d = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            inv[0][0] = g[1][1] / d;
            inv[1][1] = g[0][0] / d;
            inv[0][1] = -g[0][1] / d;
            inv[1][0] = -g[1][0] / d;
        }
        3 => {
            let d = det(g, 3);
            for a in 0..3 {
                for b in 0..3 {
                    let (a1, a2) = ((a + 1) % 3, (a + 2) % 3);
                    let (b1, b2) = ((b + 1) % 3, (b + 2) % 3);
                    // cofactor transpose
                    inv[b][a] = (g[a1][b1] * g[a2][b2] - g[a1][b2] * g[a2][b1]) / d;
                }
            }
        }
        _ => unreachable!(),
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_square_matches_inverse_transpose() {
        let j: Cols = [[2.0, 0.5, 0.0], [0.3, 1.5, 0.2], [0.1, -0.4, 1.1]];
        let (f, rows) = metric(&j, 3, 3);
        assert!((f - det(&j, 3)).abs() < 1e-14);
        // rows[c] . j[e] = delta_ce
        for c in 0..3 {
            for e in 0..3 {
                let v = dot(&rows[c], &j[e]);
                assert!((v - if c == e { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn metric_of_embedded_segment() {
        let j: Cols = [[3.0, 4.0, 0.0], [0.0; 3], [0.0; 3]];
        let (f, rows) = metric(&j, 1, 2);
        assert!((f - 5.0).abs() < 1e-14);
        assert!((dot(&rows[0], &j[0]) - 1.0).abs() < 1e-14);
    }
}
