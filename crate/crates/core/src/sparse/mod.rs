//! Compressed sparse row storage and symmetric positive definite solvers.

mod cg;
mod cholesky;

pub use cg::{pcg, schur_dirichlet_solve, solve_spd, Jacobi, Preconditioner, SolveStats, DEFAULT_TOL};
pub use cholesky::{CholeskyFactor, LaggedCholesky, SymbolicCholesky};

use std::ops::{Deref, Range};

use crate::error::{Error, Result};

/// General (possibly rectangular) CSR matrix with sorted, duplicate-free rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from raw CSR arrays; rows must be sorted and duplicate-free.
    pub fn from_raw(nrows: usize, ncols: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indptr.len() != nrows + 1 || indices.len() != values.len() || indptr[nrows] != indices.len() {
            return Err(Error::validation("inconsistent CSR arrays"));
        }
        for r in 0..nrows {
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= ncols) {
                return Err(Error::validation(format!("row {r} is unsorted, duplicated or out of range")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Sum duplicate triplets into a CSR matrix.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let trips: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, v)| (i, j, *v)))
            .collect();
        Self::from_triplets(nrows, ncols, &trips)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Copy of the pattern with all values zeroed.
    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let s = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[s.clone()], &self.values[s])
    }

    /// Position of entry (r, c) in the value array.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let s = self.indptr[r];
        self.indices[s..self.indptr[r + 1]].binary_search(&c).ok().map(|k| s + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.find(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    /// x^T A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = (0..self.nrows)
            .flat_map(|r| {
                let (c, v) = self.row(r);
                c.iter().zip(v).map(move |(&c, &v)| (c, r, v))
            })
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &trips)
    }

    /// Block `rows x cols` (contiguous ranges), keeping stored entries.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in rows.clone() {
            let (c, v) = self.row(r);
            let lo = c.partition_point(|&x| x < cols.start);
            let hi = c.partition_point(|&x| x < cols.end);
            indices.extend(c[lo..hi].iter().map(|&x| x - cols.start));
            values.extend_from_slice(&v[lo..hi]);
            indptr.push(indices.len());
        }
        Self {
            nrows: rows.len(),
            ncols: cols.len(),
            indptr,
            indices,
            values,
        }
    }

    /// `sum_i coeff_i * A_i` for matrices sharing this exact pattern.
    pub fn combine(terms: &[(f64, &CsrMatrix)]) -> Self {
        let first = terms[0].1;
        let mut out = first.zeros_like();
        for (c, m) in terms {
            assert!(m.indptr == first.indptr && m.indices == first.indices, "patterns differ");
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(r);
            for (&c, &v) in c.iter().zip(v) {
                row[c] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest |A_ij - A_ji| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            let (c, v) = self.row(r);
            for (&c, &v) in c.iter().zip(v) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Square matrix with structurally symmetric pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym(CsrMatrix);

impl SparseSym {
    pub fn new(m: CsrMatrix) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::validation(format!("matrix is {}x{}, not square", m.nrows, m.ncols)));
        }
        for r in 0..m.nrows {
            let (c, _) = m.row(r);
            if c.iter().any(|&c| m.find(c, r).is_none()) {
                return Err(Error::validation(format!("pattern is not symmetric in row {r}")));
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: CsrMatrix) -> Self {
        debug_assert_eq!(m.nrows, m.ncols);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows
    }

    pub fn as_csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn into_csr(self) -> CsrMatrix {
        self.0
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.0.asymmetry() <= rel_tol * self.0.max_abs()
    }
}

impl Deref for SparseSym {
    type Target = CsrMatrix;
    fn deref(&self) -> &CsrMatrix {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 1, 3.0), (0, 0, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 2.0]);
        let t = m.transpose();
        assert_eq!(t.get(1, 0), 4.0);
        assert_eq!(t.nrows(), 3);
    }

    #[test]
    fn submatrix_blocks() {
        let d = vec![
            vec![4.0, 1.0, 0.0, 2.0],
            vec![1.0, 5.0, 1.0, 0.0],
            vec![0.0, 1.0, 6.0, 3.0],
            vec![2.0, 0.0, 3.0, 7.0],
        ];
        let m = CsrMatrix::from_dense(&d);
        let s = m.submatrix(2..4, 0..2);
        assert_eq!(s.to_dense(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(SparseSym::new(m).unwrap().is_symmetric(0.0));
    }

    #[test]
    fn nonsymmetric_pattern_rejected() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        assert!(SparseSym::new(m).is_err());
    }
}
