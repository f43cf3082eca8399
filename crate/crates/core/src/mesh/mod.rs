//! Evolving bulk–surface simplicial meshes.
//!
//! A [`BulkSurfaceMesh`] couples a bulk triangulation (triangles for curves,
//! tetrahedra for surfaces) with the boundary triangulation formed by its
//! boundary faces. Boundary nodes are numbered first, so the trace of a bulk
//! nodal vector is its leading `n_boundary` block.

mod bsm;
mod elevate;
mod generate;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

pub use bsm::{load_mesh, parse_bsm, save_mesh, write_bsm};
pub use elevate::elevate_to_quadratic;
pub use generate::{
    ball_mesh_with_cells, disk_mesh_with_rings, generate_ball_mesh, generate_disk_mesh, jittered_ball_mesh, jittered_disk_mesh,
};

use crate::error::{Error, Result};
use crate::geom::{self, Cols, Point};
use crate::reference::{self, ReferenceElement};

/// Connectivity shared by every configuration of an evolving mesh.
#[derive(Debug)]
pub struct Topology {
    dim_m: usize,
    degree: usize,
    n_nodes: usize,
    n_boundary: usize,
    elements: Vec<usize>,
    facets: Vec<usize>,
    /// Parent bulk element of each facet and the local vertex opposite to it.
    facet_parent: Vec<(usize, usize)>,
    bulk_ref: ReferenceElement,
    surf_ref: ReferenceElement,
    pub(crate) plans: OnceLock<crate::fem::AssemblyPlans>,
}

impl Topology {
    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn nodes_per_element(&self) -> usize {
        self.bulk_ref.n_nodes()
    }

    pub fn nodes_per_facet(&self) -> usize {
        self.surf_ref.n_nodes()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / self.nodes_per_element()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len() / self.nodes_per_facet()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let s = self.nodes_per_element();
        &self.elements[e * s..(e + 1) * s]
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        let s = self.nodes_per_facet();
        &self.facets[f * s..(f + 1) * s]
    }

    pub fn facet_parent(&self, f: usize) -> (usize, usize) {
        self.facet_parent[f]
    }

    pub fn bulk_reference(&self) -> &ReferenceElement {
        &self.bulk_ref
    }

    pub fn surface_reference(&self) -> &ReferenceElement {
        &self.surf_ref
    }
}

/// Local node indices (in element numbering) of the face opposite `opposite`,
/// returned as facet-ordered lists: vertices then edge midpoints.
pub(crate) fn face_local_nodes(dim: usize, degree: usize, opposite: usize) -> Vec<usize> {
    let verts: Vec<usize> = (0..=dim).filter(|&v| v != opposite).collect();
    let mut out = verts.clone();
    if degree == 2 {
        let bulk_edges = reference::edges(dim);
        for &(a, b) in reference::edges(dim - 1) {
            let (va, vb) = (verts[a], verts[b]);
            let idx = bulk_edges
                .iter()
                .position(|&(p, q)| (p == va && q == vb) || (p == vb && q == va))
                .expect("face edge is an element edge");
            out.push(dim + 1 + idx);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BulkSurfaceMesh {
    topo: Arc<Topology>,
    positions: Vec<Point>,
    mesh_size: f64,
}

impl BulkSurfaceMesh {
    /// Build and validate a mesh. `elements` and `facets` are flattened
    /// connectivity rows of the appropriate local size.
    pub fn new(
        dim_m: usize,
        degree: usize,
        positions: Vec<Point>,
        n_boundary: usize,
        elements: Vec<usize>,
        facets: Vec<usize>,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim_m) {
            return Err(Error::validation(format!("boundary dimension must be 1 or 2, got {dim_m}")));
        }
        if !(1..=2).contains(&degree) {
            return Err(Error::validation(format!("degree must be 1 or 2, got {degree}")));
        }
        let dim = dim_m + 1;
        let bulk_ref = ReferenceElement::new(dim, degree);
        let surf_ref = ReferenceElement::new(dim_m, degree);
        let n = positions.len();
        let npe = bulk_ref.n_nodes();
        let npf = surf_ref.n_nodes();
        if elements.is_empty() || elements.len() % npe != 0 {
            return Err(Error::validation("element connectivity is empty or ragged"));
        }
        if facets.is_empty() || facets.len() % npf != 0 {
            return Err(Error::validation("boundary connectivity is empty or ragged"));
        }
        if n_boundary == 0 || n_boundary > n {
            return Err(Error::validation(format!("invalid boundary node count {n_boundary} for {n} nodes")));
        }
        if let Some(&bad) = elements.iter().find(|&&i| i >= n) {
            return Err(Error::validation(format!("element references node {bad} >= {n}")));
        }
        let mut seen = vec![false; n_boundary];
        for (f, row) in facets.chunks(npf).enumerate() {
            for &i in row {
                if i >= n_boundary {
                    return Err(Error::validation(format!(
                        "boundary facet {f} references interior node {i} (boundary nodes are 0..{n_boundary})"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!("boundary node {i} belongs to no boundary facet")));
        }

        // trace compatibility: every facet is a face of exactly one element
        let mut face_map: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (e, row) in elements.chunks(npe).enumerate() {
            for opp in 0..=dim {
                let mut key: Vec<usize> = (0..=dim).filter(|&v| v != opp).map(|v| row[v]).collect();
                key.sort_unstable();
                face_map.entry(key).or_default().push((e, opp));
            }
        }
        let mut facet_parent = Vec::with_capacity(facets.len() / npf);
        for (f, row) in facets.chunks(npf).enumerate() {
            let mut key = row[..dim].to_vec();
            key.sort_unstable();
            let parents = face_map.get(&key).ok_or_else(|| {
                Error::validation(format!("boundary facet {f} is not a face of any bulk element"))
            })?;
            if parents.len() != 1 {
                return Err(Error::validation(format!(
                    "boundary facet {f} is shared by {} bulk elements",
                    parents.len()
                )));
            }
            let (e, opp) = parents[0];
            let erow = &elements[e * npe..(e + 1) * npe];
            let mut face_nodes: Vec<usize> =
                face_local_nodes(dim, degree, opp).iter().map(|&l| erow[l]).collect();
            let mut facet_nodes = row.to_vec();
            face_nodes.sort_unstable();
            facet_nodes.sort_unstable();
            if face_nodes != facet_nodes {
                return Err(Error::validation(format!(
                    "boundary facet {f} nodes do not match the trace of element {e}"
                )));
            }
            facet_parent.push((e, opp));
        }

        let topo = Arc::new(Topology {
            dim_m,
            degree,
            n_nodes: n,
            n_boundary,
            elements,
            facets,
            facet_parent,
            bulk_ref,
            surf_ref,
            plans: OnceLock::new(),
        });
        Self::with_topology(topo, positions)
    }

    fn with_topology(topo: Arc<Topology>, positions: Vec<Point>) -> Result<Self> {
        let mut mesh = Self {
            topo,
            positions,
            mesh_size: 0.0,
        };
        mesh.check_orientation()?;
        mesh.mesh_size = mesh.element_diameters().into_iter().fold(0.0, f64::max);
        Ok(mesh)
    }

    /// Same connectivity at new node positions. Rejects inverted elements.
    pub fn displace(&self, new_positions: Vec<Point>) -> Result<Self> {
        if new_positions.len() != self.n_nodes() {
            return Err(Error::validation(format!(
                "expected {} positions, got {}",
                self.n_nodes(),
                new_positions.len()
            )));
        }
        Self::with_topology(self.topo.clone(), new_positions)
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topo
    }

    pub fn dim_m(&self) -> usize {
        self.topo.dim_m
    }

    /// Ambient dimension m + 1.
    pub fn dim(&self) -> usize {
        self.topo.dim_m + 1
    }

    pub fn degree(&self) -> usize {
        self.topo.degree
    }

    pub fn n_nodes(&self) -> usize {
        self.topo.n_nodes
    }

    pub fn n_boundary(&self) -> usize {
        self.topo.n_boundary
    }

    pub fn n_elements(&self) -> usize {
        self.topo.n_elements()
    }

    pub fn n_facets(&self) -> usize {
        self.topo.n_facets()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        self.topo.element(e)
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        self.topo.facet(f)
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn boundary_positions(&self) -> &[Point] {
        &self.positions[..self.n_boundary()]
    }

    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    /// Jacobian columns of element `e` at reference-gradient table `dphi`.
    pub(crate) fn jacobian(&self, nodes: &[usize], dphi: &[[f64; 3]], r: usize) -> Cols {
        let mut j = [[0.0; 3]; 3];
        for (a, &node) in nodes.iter().enumerate() {
            let x = &self.positions[node];
            for (c, col) in j.iter_mut().enumerate().take(r) {
                let g = dphi[a][c];
                col[0] += x[0] * g;
                col[1] += x[1] * g;
                col[2] += x[2] * g;
            }
        }
        j
    }

    fn check_orientation(&self) -> Result<()> {
        let r = self.topo.bulk_reference();
        let d = self.dim();
        for e in 0..self.n_elements() {
            let nodes = self.element(e);
            for q in 0..r.n_quad() {
                let j = self.jacobian(nodes, &r.dphi[q], d);
                let dj = geom::det(&j, d);
                if !(dj > 0.0) {
                    return Err(Error::geometry(
                        e,
                        format!("non-positive Jacobian determinant {dj:.3e} at quadrature point {q}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest distance between nodes of each element.
    pub fn element_diameters(&self) -> Vec<f64> {
        (0..self.n_elements())
            .map(|e| {
                let nodes = self.element(e);
                let mut diam: f64 = 0.0;
                for (a, &i) in nodes.iter().enumerate() {
                    for &j in &nodes[a + 1..] {
                        diam = diam.max(geom::dist(&self.positions[i], &self.positions[j]));
                    }
                }
                diam
            })
            .collect()
    }

    /// Ratio of the largest to the smallest element diameter.
    pub fn quasi_uniformity(&self) -> f64 {
        let d = self.element_diameters();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Measure of a single bulk element by quadrature.
    pub fn element_measure(&self, e: usize) -> f64 {
        let r = self.topo.bulk_reference();
        let d = self.dim();
        let nodes = self.element(e);
        (0..r.n_quad())
            .map(|q| r.quadrature.weights[q] * geom::det(&self.jacobian(nodes, &r.dphi[q], d), d))
            .sum()
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        let r = self.topo.surface_reference();
        let nodes = self.facet(f);
        (0..r.n_quad())
            .map(|q| {
                let j = self.jacobian(nodes, &r.dphi[q], self.dim_m());
                r.quadrature.weights[q] * geom::metric(&j, self.dim_m(), self.dim()).0
            })
            .sum()
    }

    /// |Ω_h| by quadrature.
    pub fn bulk_measure(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_measure(e)).sum()
    }

    /// |Γ_h| by quadrature.
    pub fn boundary_measure(&self) -> f64 {
        (0..self.n_facets()).map(|f| self.facet_measure(f)).sum()
    }

    /// Unit outward normal of the flat facet through the facet vertices,
    /// oriented away from the opposite vertex of the parent element.
    pub fn facet_outward_normal(&self, f: usize) -> Point {
        let nodes = self.facet(f);
        let p = &self.positions;
        let n = if self.dim_m() == 1 {
            let t = geom::sub(&p[nodes[1]], &p[nodes[0]]);
            [t[1], -t[0], 0.0]
        } else {
            geom::cross(&geom::sub(&p[nodes[1]], &p[nodes[0]]), &geom::sub(&p[nodes[2]], &p[nodes[0]]))
        };
        let (e, opp) = self.topo.facet_parent(f);
        let inner = p[self.element(e)[opp]];
        let sign = if geom::dot(&n, &geom::sub(&p[nodes[0]], &inner)) >= 0.0 { 1.0 } else { -1.0 };
        geom::scale(&n, sign / geom::norm(&n))
    }

    /// Human-readable statistics used by `mesh info` and run manifests.
    pub fn stats(&self) -> MeshStats {
        MeshStats {
            dim_m: self.dim_m(),
            degree: self.degree(),
            n_nodes: self.n_nodes(),
            n_boundary: self.n_boundary(),
            n_elements: self.n_elements(),
            n_facets: self.n_facets(),
            mesh_size: self.mesh_size(),
            quasi_uniformity: self.quasi_uniformity(),
            bulk_measure: self.bulk_measure(),
            boundary_measure: self.boundary_measure(),
        }
    }
}

impl PartialEq for BulkSurfaceMesh {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions
            && self.topo.n_boundary == other.topo.n_boundary
            && self.topo.degree == other.topo.degree
            && self.topo.elements == other.topo.elements
            && self.topo.facets == other.topo.facets
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MeshStats {
    pub dim_m: usize,
    pub degree: usize,
    pub n_nodes: usize,
    pub n_boundary: usize,
    pub n_elements: usize,
    pub n_facets: usize,
    pub mesh_size: f64,
    pub quasi_uniformity: f64,
    pub bulk_measure: f64,
    pub boundary_measure: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit square split into two triangles, all four corners on the boundary.
    fn square() -> BulkSurfaceMesh {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        BulkSurfaceMesh::new(1, 1, pos, 4, vec![0, 1, 2, 0, 2, 3], vec![0, 1, 1, 2, 2, 3, 3, 0]).unwrap()
    }

    #[test]
    fn square_measures() {
        let m = square();
        assert!((m.bulk_measure() - 1.0).abs() < 1e-14);
        assert!((m.boundary_measure() - 4.0).abs() < 1e-14);
        assert!((m.mesh_size() - 2f64.sqrt()).abs() < 1e-14);
        let n = m.facet_outward_normal(0);
        assert!((n[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn facet_on_interior_node_is_rejected() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]];
        let err = BulkSurfaceMesh::new(1, 1, pos, 4, vec![0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4], vec![0, 1, 1, 2, 2, 3, 3, 4])
            .unwrap_err();
        assert!(err.to_string().contains("interior node"), "{err}");
    }

    #[test]
    fn facet_not_a_face_is_rejected() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let err = BulkSurfaceMesh::new(1, 1, pos, 4, vec![0, 1, 2, 0, 2, 3], vec![0, 1, 1, 2, 2, 3, 1, 3])
            .unwrap_err();
        assert!(err.to_string().contains("not a face"), "{err}");
    }

    #[test]
    fn inverted_element_is_a_geometry_error() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let err = BulkSurfaceMesh::new(1, 1, pos, 4, vec![0, 2, 1, 0, 2, 3], vec![0, 1, 1, 2, 2, 3, 3, 0])
            .unwrap_err();
        assert!(matches!(err, Error::Geometry { element: 0, .. }), "{err}");
    }

    #[test]
    fn displace_identity_and_collapse() {
        let m = square();
        let same = m.displace(m.positions().to_vec()).unwrap();
        assert_eq!(same, m);
        let mut p = m.positions().to_vec();
        p[1] = [0.5, 0.5, 0.0];
        let err = m.displace(p).unwrap_err();
        assert!(matches!(err, Error::Geometry { element: 0, .. }), "{err}");
        assert!(m.displace(vec![[0.0; 3]; 3]).is_err());
    }

    #[test]
    fn face_local_nodes_of_quadratic_tet() {
        assert_eq!(face_local_nodes(3, 2, 0), vec![1, 2, 3, 5, 9, 8]);
        assert_eq!(face_local_nodes(2, 2, 2), vec![0, 1, 3]);
    }
}
