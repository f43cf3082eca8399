use std::collections::HashMap;

use super::BulkSurfaceMesh;
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::reference;

/// Promote a linear mesh to quadratic isoparametric elements.
///
/// Boundary edge midpoints are mapped by `projector` (when given) so that the
/// boundary interpolates the exact surface; interior midpoints stay straight.
/// New boundary midpoints are numbered right after the existing boundary
/// vertices.
pub fn elevate_to_quadratic(
    mesh: &BulkSurfaceMesh,
    projector: Option<&dyn Fn(&Point) -> Point>,
) -> Result<BulkSurfaceMesh> {
    if mesh.degree() != 1 {
        return Err(Error::validation("elevate_to_quadratic expects a degree-1 mesh"));
    }
    let dim = mesh.dim();
    let dim_m = mesh.dim_m();
    let nb = mesh.n_boundary();
    let n = mesh.n_nodes();

    let mut boundary_edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut boundary_order = Vec::new();
    for f in 0..mesh.n_facets() {
        let row = mesh.facet(f);
        for &(a, b) in reference::edges(dim_m) {
            let key = ordered(row[a], row[b]);
            boundary_edges.entry(key).or_insert_with(|| {
                boundary_order.push(key);
                boundary_order.len() - 1
            });
        }
    }
    let n_bmid = boundary_order.len();

    let mut interior_edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut interior_order = Vec::new();
    for e in 0..mesh.n_elements() {
        let row = mesh.element(e);
        for &(a, b) in reference::edges(dim) {
            let key = ordered(row[a], row[b]);
            if boundary_edges.contains_key(&key) {
                continue;
            }
            interior_edges.entry(key).or_insert_with(|| {
                interior_order.push(key);
                interior_order.len() - 1
            });
        }
    }

    // new numbering: boundary vertices, boundary midpoints, interior vertices, interior midpoints
    let vertex_index = |i: usize| if i < nb { i } else { i + n_bmid };
    let interior_mid_base = n + n_bmid;
    let edge_index = |key: (usize, usize)| -> usize {
        match boundary_edges.get(&key) {
            Some(&k) => nb + k,
            None => interior_mid_base + interior_edges[&key],
        }
    };

    let old = mesh.positions();
    let mut positions = Vec::with_capacity(n + n_bmid + interior_order.len());
    positions.extend_from_slice(&old[..nb]);
    for (k, &(a, b)) in boundary_order.iter().enumerate() {
        let mid = geom::midpoint(&old[a], &old[b]);
        let p = match projector {
            Some(proj) => proj(&mid),
            None => mid,
        };
        let len = geom::dist(&old[a], &old[b]);
        if geom::dist(&p, &mid) > 0.3 * len {
            return Err(Error::geometry(
                k,
                format!("projected midpoint of boundary edge ({a}, {b}) moved more than 0.3 edge lengths"),
            ));
        }
        positions.push(p);
    }
    positions.extend_from_slice(&old[nb..]);
    for &(a, b) in &interior_order {
        positions.push(geom::midpoint(&old[a], &old[b]));
    }

    let mut elements = Vec::with_capacity(mesh.n_elements() * reference::node_count(dim, 2));
    for e in 0..mesh.n_elements() {
        let row = mesh.element(e);
        elements.extend(row.iter().map(|&i| vertex_index(i)));
        for &(a, b) in reference::edges(dim) {
            elements.push(edge_index(ordered(row[a], row[b])));
        }
    }
    let mut facets = Vec::with_capacity(mesh.n_facets() * reference::node_count(dim_m, 2));
    for f in 0..mesh.n_facets() {
        let row = mesh.facet(f);
        facets.extend(row.iter().map(|&i| vertex_index(i)));
        for &(a, b) in reference::edges(dim_m) {
            facets.push(edge_index(ordered(row[a], row[b])));
        }
    }

    BulkSurfaceMesh::new(dim_m, 2, positions, nb + n_bmid, elements, facets)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
