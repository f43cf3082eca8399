//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"},
//!   "geometry": {"kind": "disk", "radii": [1.5], "h": [0.4, 0.2]},
//!   "discretization": {"k": 2, "q": 2, "tau": 1e-3, "T": 1},
//!   "run": {"kind": "converge", "outputs": "out", "seed": 1}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{generate_ball_mesh, generate_disk_mesh, jittered_ball_mesh, jittered_disk_mesh, load_mesh, BulkSurfaceMesh};
use crate::model::ModelParams;
use crate::stability::Mode;
use crate::surface::ExactSurface;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn first(&self) -> f64 {
        self.values()[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Disk,
    Ball,
    Ellipsoid,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default = "default_h")]
    pub h: OneOrMany,
    /// Random node displacement relative to the shortest incident edge.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_h() -> OneOrMany {
    OneOrMany::One(0.2)
}

impl GeometryConfig {
    /// Radii of the analytic shape (three entries; disks and balls repeat theirs).
    pub fn radii3(&self) -> Result<[f64; 3]> {
        let r = &self.radii;
        match (self.kind, r.len()) {
            (GeometryKind::Disk | GeometryKind::Ball, 0) => Ok([1.0; 3]),
            (GeometryKind::Disk | GeometryKind::Ball, 1) => Ok([r[0]; 3]),
            (GeometryKind::Ellipsoid, 3) => Ok([r[0], r[1], r[2]]),
            (GeometryKind::File, _) => Err(Error::validation("file geometries have no radii")),
            _ => Err(Error::validation(format!("{:?} geometry with {} radii", self.kind, r.len()))),
        }
    }

    pub fn dim_m(&self) -> Result<usize> {
        match self.kind {
            GeometryKind::Disk => Ok(1),
            GeometryKind::Ball | GeometryKind::Ellipsoid => Ok(2),
            GeometryKind::File => Ok(self.load_file()?.dim_m()),
        }
    }

    pub fn exact_surface(&self) -> Result<Option<ExactSurface>> {
        Ok(match self.kind {
            GeometryKind::Disk => Some(ExactSurface::circle(self.radii3()?[0])),
            GeometryKind::Ball | GeometryKind::Ellipsoid => Some(ExactSurface::ellipsoid(self.radii3()?)),
            GeometryKind::File => None,
        })
    }

    fn load_file(&self) -> Result<BulkSurfaceMesh> {
        let path = self.path.as_ref().ok_or_else(|| Error::validation("file geometry needs a path"))?;
        load_mesh(path)
    }

    /// Initial mesh of degree `k` with target size `h`.
    pub fn mesh(&self, h: f64, k: usize, seed: u64) -> Result<BulkSurfaceMesh> {
        let jitter = self.jitter;
        match self.kind {
            GeometryKind::File => {
                let m = self.load_file()?;
                if m.degree() != k {
                    return Err(Error::validation(format!("mesh file has degree {}, config asks for {k}", m.degree())));
                }
                Ok(m)
            }
            GeometryKind::Disk if jitter > 0.0 => jittered_disk_mesh(self.radii3()?[0], h, k, jitter, seed),
            GeometryKind::Disk => generate_disk_mesh(self.radii3()?[0], h, k),
            _ if jitter > 0.0 => jittered_ball_mesh(self.radii3()?, h, k, jitter, seed),
            _ => generate_ball_mesh(self.radii3()?, h, k),
        }
    }

    /// True for a disk or ball, where the radial solution applies.
    pub fn is_round(&self) -> bool {
        match self.kind {
            GeometryKind::Disk | GeometryKind::Ball => true,
            GeometryKind::Ellipsoid => self.radii.windows(2).all(|w| w[0] == w[1]),
            GeometryKind::File => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub k: usize,
    pub q: usize,
    pub tau: OneOrMany,
    #[serde(rename = "T")]
    pub t_end: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Simulate,
    Converge,
    Stability,
    Regularization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Number of uniformly spaced snapshot times after t = 0.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_mu_values")]
    pub mu_values: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Stability modes to sweep; both when absent.
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Error sampling stride in steps for convergence runs.
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}
fn default_snapshots() -> usize {
    20
}
fn default_mu_values() -> Vec<f64> {
    vec![0.0, 0.01, 0.1, 1.0]
}
fn default_levels() -> usize {
    4
}
fn default_samples() -> usize {
    20
}
fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelParams,
    pub geometry: GeometryConfig,
    pub discretization: Discretization,
    pub run: RunConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let d = &self.discretization;
        if !(1..=2).contains(&d.k) {
            return Err(Error::validation(format!("k must be 1 or 2, got {}", d.k)));
        }
        if !(1..=6).contains(&d.q) {
            return Err(Error::validation(format!("q must lie in 1..=6, got {}", d.q)));
        }
        let taus = d.tau.values();
        if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::validation("time steps must be positive"));
        }
        if !(d.t_end >= 0.0) {
            return Err(Error::validation("final time must be nonnegative"));
        }
        let hs = self.geometry.h.values();
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::validation("mesh sizes must be positive"));
        }
        if self.geometry.kind != GeometryKind::File {
            self.geometry.radii3()?;
        }
        if self.run.sample_stride == 0 {
            return Err(Error::validation("sample_stride must be positive"));
        }
        if self.run.kind == RunKind::Regularization && self.run.mu_values.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::validation("regularization values must be nonnegative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;

    const SAMPLE: &str = r#"{
        "model": {"alpha": 10, "beta": 1, "mu": 0, "Q": "const:1.5"},
        "geometry": {"kind": "ellipsoid", "radii": [0.5, 0.5, 1], "h": 0.3},
        "discretization": {"k": 2, "q": 2, "tau": 1e-3, "T": 1},
        "run": {"kind": "simulate", "outputs": "out/ellipsoid", "seed": 3}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = Config::from_json(SAMPLE).unwrap();
        assert_eq!(c.model.alpha, 10.0);
        assert_eq!(c.model.source, Source::Constant(1.5));
        assert_eq!(c.geometry.radii3().unwrap(), [0.5, 0.5, 1.0]);
        assert_eq!(c.run.snapshots, 20);
        assert_eq!(c.run.mu_values, vec![0.0, 0.01, 0.1, 1.0]);
        let again = Config::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = SAMPLE.replace("\"k\": 2", "\"k\": 3");
        assert!(matches!(Config::from_json(&bad), Err(Error::Validation(_))));
        let bad = SAMPLE.replace("\"alpha\": 10", "\"alpha\": -1");
        assert!(Config::from_json(&bad).is_err());
        let bad = SAMPLE.replace("[0.5, 0.5, 1]", "[0.5, 1]");
        assert!(Config::from_json(&bad).is_err());
        let bad = SAMPLE.replace("\"seed\": 3", "\"seed\": 3, \"bogus\": 1");
        assert!(matches!(Config::from_json(&bad), Err(Error::Json(_))));
        assert!(Config::from_json("{").is_err());
    }

    #[test]
    fn lists_and_polynomial_sources() {
        let text = SAMPLE
            .replace("\"h\": 0.3", "\"h\": [0.4, 0.2]")
            .replace("const:1.5", "poly:1.5 + 0.1*x^2*t");
        let c = Config::from_json(&text).unwrap();
        assert_eq!(c.geometry.h.values(), vec![0.4, 0.2]);
        assert!(c.model.source.as_constant().is_none());
    }
}
