//! Python bindings: meshes, configurations, the experiment drivers, BDF
//! coefficients, norms and the radial exact solution.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bulkgrow::bdf::bdf_coefficients;
use bulkgrow::config::Config as CoreConfig;
use bulkgrow::experiments::{run_converge, run_simulate};
use bulkgrow::mesh::{generate_ball_mesh, generate_disk_mesh, load_mesh, save_mesh};
use bulkgrow::norms::{norm_k, norm_m, Block, HalfNorm};
use bulkgrow::oracle::RadialOracle as CoreOracle;
use bulkgrow::output::{Cell, Table};
use bulkgrow::stability::{stability_sweep, Mode, SweepGeometry, SweepSpec};
use bulkgrow::{BulkSurfaceMesh, SystemMatrices};

create_exception!(bulkgrow, NumericalError, PyException);

fn to_py(e: bulkgrow::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else if matches!(e, bulkgrow::Error::Io(_)) {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn table_dict<'py>(py: Python<'py>, table: &Table) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (j, name) in table.columns.iter().enumerate() {
        let column: Vec<Bound<'py, PyAny>> = table
            .rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Int(v) => v.into_pyobject(py).unwrap().into_any(),
                Cell::Float(v) => v.into_pyobject(py).unwrap().into_any(),
                Cell::Text(s) => s.into_pyobject(py).unwrap().into_any(),
            })
            .collect();
        d.set_item(name, column)?;
    }
    Ok(d)
}

/// Bulk–surface mesh; boundary nodes come first.
#[pyclass(name = "Mesh", module = "bulkgrow", frozen)]
struct Mesh {
    inner: BulkSurfaceMesh,
}

#[pymethods]
impl Mesh {
    #[staticmethod]
    #[pyo3(signature = (radius, h, degree = 2))]
    fn disk(radius: f64, h: f64, degree: usize) -> PyResult<Self> {
        Ok(Self { inner: generate_disk_mesh(radius, h, degree).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (radii, h, degree = 2))]
    fn ball(radii: [f64; 3], h: f64, degree: usize) -> PyResult<Self> {
        Ok(Self { inner: generate_ball_mesh(radii, h, degree).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: load_mesh(path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_mesh(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn dim_m(&self) -> usize {
        self.inner.dim_m()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_boundary(&self) -> usize {
        self.inner.n_boundary()
    }

    #[getter]
    fn mesh_size(&self) -> f64 {
        self.inner.mesh_size()
    }

    fn bulk_measure(&self) -> f64 {
        self.inner.bulk_measure()
    }

    fn boundary_measure(&self) -> f64 {
        self.inner.boundary_measure()
    }

    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.positions().to_vec()
    }

    /// Summary statistics as a dict.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let text = serde_json::to_string(&self.inner.stats()).map_err(|e| PyValueError::new_err(e.to_string()))?;
        py.import("json")?.call_method1("loads", (text,))
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(dim_m={}, degree={}, n_nodes={}, n_boundary={})",
            self.inner.dim_m(),
            self.inner.degree(),
            self.inner.n_nodes(),
            self.inner.n_boundary()
        )
    }
}

/// Mass and stiffness matrices of a mesh with the norms built from them.
#[pyclass(name = "Matrices", module = "bulkgrow", frozen)]
struct Matrices {
    inner: SystemMatrices,
}

fn block(surface: bool) -> Block {
    if surface {
        Block::Surface
    } else {
        Block::Bulk
    }
}

#[pymethods]
impl Matrices {
    #[new]
    fn new(mesh: &Mesh) -> PyResult<Self> {
        Ok(Self { inner: SystemMatrices::assemble(&mesh.inner).map_err(to_py)? })
    }

    #[pyo3(signature = (field, surface = false))]
    fn norm_m(&self, field: Vec<f64>, surface: bool) -> PyResult<f64> {
        norm_m(&field, &self.inner, block(surface)).map_err(to_py)
    }

    #[pyo3(signature = (field, surface = false))]
    fn norm_k(&self, field: Vec<f64>, surface: bool) -> PyResult<f64> {
        norm_k(&field, &self.inner, block(surface)).map_err(to_py)
    }

    /// Discrete H^{1/2} norm of a boundary field.
    fn norm_h_half(&self, g: Vec<f64>) -> PyResult<f64> {
        if g.len() != self.inner.n_boundary() {
            return Err(PyValueError::new_err(format!("expected {} boundary values", self.inner.n_boundary())));
        }
        let half = HalfNorm::new(self.inner.mass_surf.as_csr(), self.inner.stiff_surf.as_csr()).map_err(to_py)?;
        Ok(half.norm(&g))
    }
}

/// Validated run configuration.
#[pyclass(name = "Config", module = "bulkgrow", frozen)]
struct Config {
    inner: CoreConfig,
}

#[pymethods]
impl Config {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreConfig::from_json(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: CoreConfig::load(&path).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn mesh(&self) -> PyResult<Mesh> {
        let c = &self.inner;
        let inner = c.geometry.mesh(c.geometry.h.first(), c.discretization.k, c.run.seed).map_err(to_py)?;
        Ok(Mesh { inner })
    }
}

/// Exact radially symmetric solution for a constant source and μ = 0.
#[pyclass(name = "RadialOracle", module = "bulkgrow", frozen)]
struct RadialOracle {
    inner: CoreOracle,
}

#[pymethods]
impl RadialOracle {
    #[new]
    fn new(dim_m: usize, r0: f64, source: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreOracle::new(dim_m, r0, source, alpha, beta).map_err(to_py)? })
    }

    fn radius(&self, t: f64) -> f64 {
        self.inner.radius(t)
    }

    fn pressure(&self, r: f64, t: f64) -> PyResult<f64> {
        self.inner.pressure(r, t).map_err(to_py)
    }

    fn normal_speed(&self, t: f64) -> f64 {
        self.inner.normal_speed(t)
    }
}

/// Coefficients (delta, gamma) of the BDF method of order q.
#[pyfunction]
fn bdf(q: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = bdf_coefficients(q).map_err(to_py)?;
    Ok((s.delta().to_vec(), s.gamma().to_vec()))
}

/// Runs a simulation writing into `out`; returns step count, output files
/// and the diagnostics columns.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config: &Config, out: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| run_simulate(&config.inner, &out)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("steps", r.steps)?;
    d.set_item("outputs", r.outputs)?;
    d.set_item("diagnostics", table_dict(py, &r.diagnostics)?)?;
    d.set_item("final_positions", r.final_state.positions)?;
    d.set_item("final_pressure", r.final_state.pressure)?;
    Ok(d)
}

/// Runs the h x tau convergence grid; returns the error and EOC tables.
#[pyfunction]
fn converge<'py>(py: Python<'py>, config: &Config) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let r = py.detach(|| run_converge(&config.inner)).map_err(to_py)?;
    Ok((table_dict(py, &r.errors)?, table_dict(py, &r.eoc)?))
}

/// Maximum discrete stability ratio per refinement level.
#[pyfunction]
#[pyo3(signature = (geometry, mode, levels = 3, samples = 20, radius = 1.0, degree = 1))]
fn stability<'py>(
    py: Python<'py>,
    geometry: &str,
    mode: &str,
    levels: usize,
    samples: usize,
    radius: f64,
    degree: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let geometry = match geometry {
        "disk" => SweepGeometry::Disk { radius },
        "sphere" | "ball" => SweepGeometry::Sphere { radius },
        other => return Err(PyValueError::new_err(format!("unknown geometry {other:?}"))),
    };
    let mode = match mode {
        "dirichlet" => Mode::Dirichlet,
        "robin" => Mode::Robin,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let mut spec = SweepSpec::new(geometry, levels, samples, mode);
    spec.degree = degree;
    let rows = py.detach(|| stability_sweep(&spec)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("h", rows.iter().map(|r| r.h).collect::<Vec<_>>())?;
    d.set_item("N", rows.iter().map(|r| r.n).collect::<Vec<_>>())?;
    d.set_item("N_Gamma", rows.iter().map(|r| r.n_gamma).collect::<Vec<_>>())?;
    d.set_item("max_ratio", rows.iter().map(|r| r.max_ratio).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "bulkgrow")]
pub fn bulkgrow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<Mesh>()?;
    m.add_class::<Matrices>()?;
    m.add_class::<Config>()?;
    m.add_class::<RadialOracle>()?;
    m.add_function(wrap_pyfunction!(bdf, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    Ok(())
}
