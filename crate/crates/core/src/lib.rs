//! Finite element simulation of tumour-like growth: a bulk Robin problem
//! coupled to a forced mean curvature flow of its boundary.
//!
//! The discretization uses isoparametric Lagrange elements of degree 1 or 2 on
//! an evolving bulk–surface mesh and a linearly implicit BDF method of order
//! 1 to 6 in time.

pub mod bdf;
pub mod config;
pub mod coupled;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod geom;
pub mod mesh;
pub mod model;
pub mod norms;
pub mod oracle;
pub mod output;
pub mod reference;
pub mod sparse;
pub mod stability;
pub mod surface;

pub use error::{Error, Result};
pub use fem::{NodalField, SystemMatrices};
pub use mesh::BulkSurfaceMesh;
pub use model::{ModelParams, Source};
pub use sparse::{CsrMatrix, SparseSym};
pub use surface::ExactSurface;
