//! Structured generators for disks (m = 1) and balls / ellipsoids (m = 2).

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{elevate_to_quadratic, BulkSurfaceMesh};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::surface::ExactSurface;

/// Upper bound on generated node counts.
const MAX_NODES: usize = 4_000_000;

/// Disk of the given radius from concentric rings of `6j` nodes; boundary
/// nodes are uniformly spaced on the circle. The ring spacing is at most
/// `target_h`, which keeps element diameters below `1.5 target_h`.
pub fn generate_disk_mesh(radius: f64, target_h: f64, degree: usize) -> Result<BulkSurfaceMesh> {
    disk_mesh_with_rings(radius, disk_rings(radius, target_h, degree)?, degree)
}

fn disk_rings(radius: f64, target_h: f64, degree: usize) -> Result<usize> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::validation(format!("disk radius must be positive, got {radius}")));
    }
    if !(target_h > 0.0 && target_h < radius) {
        return Err(Error::validation(format!(
            "target mesh size must lie in (0, radius), got {target_h}"
        )));
    }
    let rings = (radius / target_h).ceil();
    if rings * rings * 3.0 * if degree == 2 { 4.0 } else { 1.0 } > MAX_NODES as f64 {
        return Err(Error::Resource(format!(
            "disk mesh with h = {target_h} exceeds {MAX_NODES} nodes"
        )));
    }
    Ok(rings as usize)
}

/// Disk with a prescribed number of rings (`rings >= 1`).
pub fn disk_mesh_with_rings(radius: f64, rings: usize, degree: usize) -> Result<BulkSurfaceMesh> {
    finish(disk_linear(radius, rings)?, degree, &ExactSurface::circle(radius))
}

/// [`generate_disk_mesh`] with nodes randomly displaced by up to `amplitude`
/// times their shortest incident edge, which removes the ring symmetry.
pub fn jittered_disk_mesh(radius: f64, target_h: f64, degree: usize, amplitude: f64, seed: u64) -> Result<BulkSurfaceMesh> {
    let rings = disk_rings(radius, target_h, degree)?;
    let circle = ExactSurface::circle(radius);
    let linear = jitter(disk_linear(radius, rings)?, &circle, amplitude, seed)?;
    finish(linear, degree, &circle)
}

/// [`generate_ball_mesh`] with nodes randomly displaced as in [`jittered_disk_mesh`].
pub fn jittered_ball_mesh(radii: [f64; 3], target_h: f64, degree: usize, amplitude: f64, seed: u64) -> Result<BulkSurfaceMesh> {
    let linear = generate_ball_mesh(radii, target_h, 1)?;
    let surface = ExactSurface::ellipsoid(radii);
    finish(jitter(linear, &surface, amplitude, seed)?, degree, &surface)
}

fn jitter(linear: BulkSurfaceMesh, surface: &ExactSurface, amplitude: f64, seed: u64) -> Result<BulkSurfaceMesh> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::validation(format!("jitter amplitude must lie in [0, 0.5), got {amplitude}")));
    }
    let d = linear.dim();
    let n = linear.n_nodes();
    let mut shortest = vec![f64::INFINITY; n];
    let npe = linear.topology().nodes_per_element();
    for e in 0..linear.n_elements() {
        let el = linear.element(e);
        for a in 0..npe {
            for b in a + 1..npe {
                let l = geom::norm(&geom::sub(&linear.positions()[el[a]], &linear.positions()[el[b]]));
                shortest[el[a]] = shortest[el[a]].min(l);
                shortest[el[b]] = shortest[el[b]].min(l);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = linear.n_boundary();
    let moved: Vec<Point> = linear
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = [0.0; 3];
            for c in r.iter_mut().take(d) {
                *c = rng.gen_range(-1.0..1.0);
            }
            if i < nb {
                let nu = surface.normal(p);
                r = geom::sub(&r, &geom::scale(&nu, geom::dot(&r, &nu)));
            }
            let len = geom::norm(&r);
            let step = if len > 0.0 { amplitude * shortest[i] * rng.gen_range(0.0..1.0) / len } else { 0.0 };
            let q = geom::add(p, &geom::scale(&r, step));
            if i < nb {
                surface.project(&q)
            } else {
                q
            }
        })
        .collect();
    linear.displace(moved)
}

fn disk_linear(radius: f64, rings: usize) -> Result<BulkSurfaceMesh> {
    if rings == 0 {
        return Err(Error::validation("need at least one ring"));
    }
    let ring_size = |j: usize| if j == 0 { 1 } else { 6 * j };
    // global index of node i on ring j; outer ring first, then center and inner rings
    let mut offset = vec![0usize; rings + 1];
    offset[rings] = 0;
    let mut next = ring_size(rings);
    for (j, off) in offset.iter_mut().enumerate().take(rings) {
        *off = next;
        next += ring_size(j);
    }
    let mut positions = vec![[0.0; 3]; next];
    for j in 0..=rings {
        let r = radius * j as f64 / rings as f64;
        let nj = ring_size(j);
        for i in 0..nj {
            let theta = 2.0 * PI * i as f64 / nj as f64;
            let p = if j == rings {
                [radius * theta.cos(), radius * theta.sin(), 0.0]
            } else {
                [r * theta.cos(), r * theta.sin(), 0.0]
            };
            positions[offset[j] + i] = p;
        }
    }

    let mut tris: Vec<[usize; 3]> = Vec::new();
    for j in 1..=rings {
        let (p, q) = (ring_size(j - 1), ring_size(j));
        let inner = |i: usize| offset[j - 1] + (i % p);
        let outer = |i: usize| offset[j] + (i % q);
        let (mut i, mut k) = (0usize, 0usize);
        while i < p || k < q {
            // advance the ring whose new diagonal is shorter
            let inner_step = p > 1
                && i < p
                && (k == q
                    || geom::dist(&positions[inner(i + 1)], &positions[outer(k)])
                        < geom::dist(&positions[inner(i)], &positions[outer(k + 1)]) - 1e-12);
            if inner_step {
                tris.push([inner(i), inner(i + 1), outer(k)]);
                i += 1;
            } else {
                tris.push([inner(i), outer(k + 1), outer(k)]);
                k += 1;
                if p == 1 && k == q {
                    i = p;
                }
            }
        }
    }
    let mut elements = Vec::with_capacity(tris.len() * 3);
    for mut t in tris {
        let a = geom::sub(&positions[t[1]], &positions[t[0]]);
        let b = geom::sub(&positions[t[2]], &positions[t[0]]);
        if a[0] * b[1] - a[1] * b[0] < 0.0 {
            t.swap(1, 2);
        }
        elements.extend_from_slice(&t);
    }
    let nb = ring_size(rings);
    let facets: Vec<usize> = (0..nb).flat_map(|i| [i, (i + 1) % nb]).collect();
    BulkSurfaceMesh::new(1, 1, positions, nb, elements, facets)
}

/// Ellipsoid (or ball when all radii agree) with element diameter about `target_h`.
pub fn generate_ball_mesh(radii: [f64; 3], target_h: f64, degree: usize) -> Result<BulkSurfaceMesh> {
    check_radii(&radii)?;
    if !(target_h > 0.0) {
        return Err(Error::validation(format!("target mesh size must be positive, got {target_h}")));
    }
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let cells = ((3f64.sqrt() * rmax / target_h).ceil() as usize).max(1);
    ball_mesh_with_cells(radii, cells, degree)
}

fn check_radii(radii: &[f64; 3]) -> Result<()> {
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::validation(format!("ellipsoid radii must be positive, got {radii:?}")));
    }
    Ok(())
}

/// Tetrahedral mesh of an ellipsoid from a `2n x 2n x 2n` cube grid.
///
/// Each cube cell is split into six Kuhn tetrahedra, mirrored per octant so
/// that every tetrahedron has at most one face on the cube surface. The grid is
/// mapped onto the unit ball by `p -> p |p|_inf / |p|_2`, which sends each
/// concentric cube shell onto a sphere, and then scaled by `radii`.
pub fn ball_mesh_with_cells(radii: [f64; 3], cells_per_half_axis: usize, degree: usize) -> Result<BulkSurfaceMesh> {
    check_radii(&radii)?;
    let n = cells_per_half_axis as i64;
    if n == 0 {
        return Err(Error::validation("need at least one cell per half axis"));
    }
    let side = (2 * n + 1) as usize;
    let total = side.pow(3) * if degree == 2 { 8 } else { 1 };
    if total > MAX_NODES {
        return Err(Error::Resource(format!("ball mesh with {n} cells per half axis exceeds {MAX_NODES} nodes")));
    }

    let on_boundary = |g: [i64; 3]| g.iter().any(|c| c.abs() == n);
    let mut index: HashMap<[i64; 3], usize> = HashMap::with_capacity(side.pow(3));
    let mut grid = Vec::with_capacity(side.pow(3));
    for pass in 0..2 {
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let g = [i, j, k];
                    if on_boundary(g) == (pass == 0) {
                        index.insert(g, grid.len());
                        grid.push(g);
                    }
                }
            }
        }
    }
    let nb = grid.iter().filter(|g| on_boundary(**g)).count();
    let positions: Vec<Point> = grid
        .iter()
        .map(|g| {
            let p = [g[0] as f64 / n as f64, g[1] as f64 / n as f64, g[2] as f64 / n as f64];
            let l2 = geom::norm(&p);
            let linf = p.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            let s = if l2 > 0.0 { linf / l2 } else { 0.0 };
            [p[0] * s * radii[0], p[1] * s * radii[1], p[2] * s * radii[2]]
        })
        .collect();

    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::new();
    let mut facets = Vec::new();
    for i in -n..n {
        for j in -n..n {
            for k in -n..n {
                let lower = [i, j, k];
                // local origin is the cell corner nearest the grid centre
                let mut origin = [0i64; 3];
                let mut dir = [0i64; 3];
                for c in 0..3 {
                    if lower[c] >= 0 {
                        origin[c] = lower[c];
                        dir[c] = 1;
                    } else {
                        origin[c] = lower[c] + 1;
                        dir[c] = -1;
                    }
                }
                for perm in PERMS {
                    let mut g = origin;
                    let mut tet = [index[&g]; 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        g[axis] += dir[axis];
                        tet[s + 1] = index[&g];
                    }
                    let x: Vec<&Point> = tet.iter().map(|&v| &positions[v]).collect();
                    let vol = geom::dot(
                        &geom::sub(x[1], x[0]),
                        &geom::cross(&geom::sub(x[2], x[0]), &geom::sub(x[3], x[0])),
                    );
                    if vol < 0.0 {
                        tet.swap(1, 2);
                    }
                    elements.extend_from_slice(&tet);
                    // only the face opposite the inner corner can lie on the boundary
                    let face: Vec<usize> = tet.iter().copied().filter(|&v| v != tet[0]).collect();
                    if face.iter().all(|&v| v < nb) {
                        let (a, b, c) = (&positions[face[0]], &positions[face[1]], &positions[face[2]]);
                        let normal = geom::cross(&geom::sub(b, a), &geom::sub(c, a));
                        if geom::dot(&normal, &geom::sub(a, &positions[tet[0]])) > 0.0 {
                            facets.extend_from_slice(&[face[0], face[1], face[2]]);
                        } else {
                            facets.extend_from_slice(&[face[0], face[2], face[1]]);
                        }
                    }
                }
            }
        }
    }
    let linear = BulkSurfaceMesh::new(2, 1, positions, nb, elements, facets)?;
    finish(linear, degree, &ExactSurface::ellipsoid(radii))
}

fn finish(linear: BulkSurfaceMesh, degree: usize, surface: &ExactSurface) -> Result<BulkSurfaceMesh> {
    match degree {
        1 => Ok(linear),
        2 => elevate_to_quadratic(&linear, Some(&|p: &Point| surface.project(p))),
        _ => Err(Error::validation(format!("degree must be 1 or 2, got {degree}"))),
    }
}
