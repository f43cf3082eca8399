//! The `.bsm` ASCII mesh format.
//!
//! ```text
//! bsm 1 <m> <k> <N> <N_Gamma>
//! NODES
//! x y [z]            # N rows, m+1 coordinates
//! ELEMENTS
//! i0 i1 ...          # 0-based bulk connectivity
//! BOUNDARY
//! j0 j1 ...          # boundary facets, indices < N_Gamma
//! ```
//! Lines starting with `#` (and trailing `# ...`) are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::BulkSurfaceMesh;
use crate::error::{Error, Result};
use crate::reference;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<BulkSurfaceMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_bsm(&text)
}

pub fn save_mesh(mesh: &BulkSurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_bsm(mesh))?;
    Ok(())
}

/// Serialize with 17 significant digits so positions round-trip exactly.
pub fn write_bsm(mesh: &BulkSurfaceMesh) -> String {
    let dim = mesh.dim();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "bsm 1 {} {} {} {}",
        mesh.dim_m(),
        mesh.degree(),
        mesh.n_nodes(),
        mesh.n_boundary()
    );
    out.push_str("NODES\n");
    for p in mesh.positions() {
        let row: Vec<String> = p[..dim].iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let join = |row: &[usize]| row.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    out.push_str("ELEMENTS\n");
    for e in 0..mesh.n_elements() {
        out.push_str(&join(mesh.element(e)));
        out.push('\n');
    }
    out.push_str("BOUNDARY\n");
    for f in 0..mesh.n_facets() {
        out.push_str(&join(mesh.facet(f)));
        out.push('\n');
    }
    out
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    Header,
    Nodes,
    Elements,
    Boundary,
}

pub fn parse_bsm(text: &str) -> Result<BulkSurfaceMesh> {
    let mut section = Section::Header;
    let mut header: Option<(usize, usize, usize, usize)> = None;
    let mut positions = Vec::new();
    let mut elements = Vec::new();
    let mut facets = Vec::new();
    let mut boundary_line = 0;
    let mut seen = [false; 3];

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if section == Section::Header {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 6 || tok[0] != "bsm" || tok[1] != "1" {
                return Err(Error::parse(line_no, "expected header `bsm 1 <m> <k> <N> <N_Gamma>`"));
            }
            let nums: Vec<usize> = tok[2..]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(line_no, "header fields must be non-negative integers"))?;
            if !(1..=2).contains(&nums[0]) || !(1..=2).contains(&nums[1]) {
                return Err(Error::parse(line_no, "m and k must be 1 or 2"));
            }
            header = Some((nums[0], nums[1], nums[2], nums[3]));
            section = Section::Nodes;
            continue;
        }
        let (m, k, n, nb) = header.expect("header parsed");
        match line {
            "NODES" | "ELEMENTS" | "BOUNDARY" => {
                let (next, slot) = match line {
                    "NODES" => (Section::Nodes, 0),
                    "ELEMENTS" => (Section::Elements, 1),
                    _ => (Section::Boundary, 2),
                };
                let expected = [positions.is_empty(), seen[0], seen[1]][slot];
                if seen[slot] || !expected {
                    return Err(Error::parse(line_no, format!("section {line} out of order or repeated")));
                }
                seen[slot] = true;
                section = next;
                if next == Section::Boundary {
                    boundary_line = line_no;
                }
                continue;
            }
            _ => {}
        }
        if !seen[0] {
            return Err(Error::parse(line_no, "expected section header NODES"));
        }
        match section {
            Section::Nodes => {
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(line_no, "malformed coordinate"))?;
                if vals.len() != m + 1 {
                    return Err(Error::parse(line_no, format!("expected {} coordinates", m + 1)));
                }
                let mut p = [0.0; 3];
                p[..=m].copy_from_slice(&vals);
                positions.push(p);
            }
            Section::Elements | Section::Boundary => {
                let row: Vec<usize> = line
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(line_no, "malformed index"))?;
                let (dim, dest) = if section == Section::Elements {
                    (m + 1, &mut elements)
                } else {
                    (m, &mut facets)
                };
                let want = reference::node_count(dim, k);
                if row.len() != want {
                    return Err(Error::parse(line_no, format!("expected {want} indices, got {}", row.len())));
                }
                if let Some(&bad) = row.iter().find(|&&i| i >= n) {
                    return Err(Error::parse(line_no, format!("index {bad} out of range (N = {n})")));
                }
                if section == Section::Boundary {
                    if let Some(&bad) = row.iter().find(|&&i| i >= nb) {
                        return Err(Error::parse(
                            line_no,
                            format!("boundary facet references interior node {bad} (N_Gamma = {nb})"),
                        ));
                    }
                }
                dest.extend(row);
            }
            Section::Header => unreachable!(),
        }
    }

    let (m, k, n, nb) = header.ok_or_else(|| Error::parse(1, "missing header"))?;
    let last = text.lines().count().max(1);
    if !seen.iter().all(|s| *s) {
        return Err(Error::parse(last, "missing NODES, ELEMENTS or BOUNDARY section"));
    }
    if positions.len() != n {
        return Err(Error::parse(last, format!("expected {n} nodes, found {}", positions.len())));
    }
    if elements.is_empty() {
        return Err(Error::parse(last, "ELEMENTS section is empty"));
    }
    if facets.is_empty() {
        return Err(Error::parse(last, "BOUNDARY section is empty"));
    }
    BulkSurfaceMesh::new(m, k, positions, nb, elements, facets).map_err(|e| match e {
        Error::Validation(msg) => Error::parse(boundary_line, msg),
        other => other,
    })
}
