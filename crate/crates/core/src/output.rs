//! Legacy ASCII VTK snapshots, fixed-precision CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::coupled::SimState;
use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::{BulkSurfaceMesh, MeshStats};

/// Version string recorded in manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn vtk_cell_type(dim: usize, degree: usize) -> u8 {
    match (dim, degree) {
        (2, 1) => 5,
        (2, 2) => 22,
        (3, 1) => 10,
        _ => 24,
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_points(out: &mut String, points: &[geom::Point]) {
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(out, "{} {} {}", fmt_f(p[0]), fmt_f(p[1]), fmt_f(p[2]));
    }
}

fn write_scalars(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{}", fmt_f(*v));
    }
}

fn write_vectors(out: &mut String, name: &str, values: &[geom::Point]) {
    let _ = writeln!(out, "VECTORS {name} double");
    for p in values {
        let _ = writeln!(out, "{} {} {}", fmt_f(p[0]), fmt_f(p[1]), fmt_f(p[2]));
    }
}

/// Bulk snapshot as an UNSTRUCTURED_GRID with point data u, H (zero at
/// interior nodes), |v| and v.
pub fn vtk_bulk(state: &SimState, mesh: &BulkSurfaceMesh) -> Result<String> {
    state.check_sizes(mesh.n_nodes(), mesh.n_boundary())?;
    let n = mesh.n_nodes();
    let npe = mesh.topology().nodes_per_element();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nbulk t={}\nASCII\nDATASET UNSTRUCTURED_GRID", state.time);
    write_points(&mut out, &state.positions);
    let ne = mesh.n_elements();
    let _ = writeln!(out, "CELLS {} {}", ne, ne * (npe + 1));
    for e in 0..ne {
        let ids: Vec<String> = mesh.element(e).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{} {}", npe, ids.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    let t = vtk_cell_type(mesh.dim(), mesh.degree());
    for _ in 0..ne {
        let _ = writeln!(out, "{t}");
    }
    let _ = writeln!(out, "POINT_DATA {n}");
    write_scalars(&mut out, "u", &state.pressure);
    let mut h = state.curvature.clone();
    h.resize(n, 0.0);
    write_scalars(&mut out, "H", &h);
    let speed: Vec<f64> = state.velocity.iter().map(geom::norm).collect();
    write_scalars(&mut out, "speed", &speed);
    write_vectors(&mut out, "v", &state.velocity);
    Ok(out)
}

/// Linear sub-cells of a boundary facet (curved facets are split).
fn linear_facets(mesh: &BulkSurfaceMesh, f: usize) -> Vec<Vec<usize>> {
    let v = mesh.facet(f);
    match (mesh.dim_m(), mesh.degree()) {
        (1, 1) | (2, 1) => vec![v.to_vec()],
        (1, _) => vec![vec![v[0], v[2]], vec![v[2], v[1]]],
        _ => vec![
            vec![v[0], v[3], v[5]],
            vec![v[3], v[1], v[4]],
            vec![v[5], v[4], v[2]],
            vec![v[3], v[4], v[5]],
        ],
    }
}

/// Boundary snapshot as POLYDATA with point data u_Γ, H, V and ν.
pub fn vtk_surface(state: &SimState, mesh: &BulkSurfaceMesh) -> Result<String> {
    state.check_sizes(mesh.n_nodes(), mesh.n_boundary())?;
    let nb = mesh.n_boundary();
    let cells: Vec<Vec<usize>> = (0..mesh.n_facets()).flat_map(|f| linear_facets(mesh, f)).collect();
    let size: usize = cells.iter().map(|c| c.len() + 1).sum();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nsurface t={}\nASCII\nDATASET POLYDATA", state.time);
    write_points(&mut out, &state.positions[..nb]);
    let kind = if mesh.dim_m() == 1 { "LINES" } else { "POLYGONS" };
    let _ = writeln!(out, "{kind} {} {size}", cells.len());
    for c in &cells {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(out, "POINT_DATA {nb}");
    write_scalars(&mut out, "u", &state.pressure[..nb]);
    write_scalars(&mut out, "H", &state.curvature);
    write_scalars(&mut out, "V", &state.normal_speed);
    write_vectors(&mut out, "normal", &state.normals);
    Ok(out)
}

/// Writes `<stem>_bulk.vtk` and `<stem>_surface.vtk` into `dir`.
pub fn write_vtk(state: &SimState, mesh: &BulkSurfaceMesh, dir: &Path, stem: &str) -> Result<()> {
    fs::write(dir.join(format!("{stem}_bulk.vtk")), vtk_bulk(state, mesh)?)?;
    fs::write(dir.join(format!("{stem}_surface.vtk")), vtk_surface(state, mesh)?)?;
    Ok(())
}

/// A table with a fixed column order; numbers are written with 12
/// significant digits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{}", fmt_f(*v)),
            Cell::Text(s) if s.contains([',', '"', '\n']) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row with {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Record written next to every run's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: serde_json::Value,
    pub mesh: Vec<MeshStats>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(config: serde_json::Value) -> Self {
        Self {
            version: VERSION.to_string(),
            config,
            mesh: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
