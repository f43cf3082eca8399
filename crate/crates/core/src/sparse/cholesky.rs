//! Up-looking sparse Cholesky with a nested-dissection ordering.
//!
//! The symbolic phase depends only on the pattern, so it is computed once per
//! mesh topology and reused for every refactorization as the mesh moves.

use super::{CsrMatrix, Preconditioner, SparseSym};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const LEAF_SIZE: usize = 64;

#[derive(Clone, Debug)]
pub struct SymbolicCholesky {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// Pattern of the permuted matrix (both triangles), rows sorted.
    c_indptr: Vec<usize>,
    c_indices: Vec<usize>,
    /// Position of each source value in the permuted value array.
    value_map: Vec<usize>,
    parent: Vec<usize>,
    l_colptr: Vec<usize>,
    /// Source pattern fingerprint.
    src_indptr: Vec<usize>,
    src_indices: Vec<usize>,
}

impl SymbolicCholesky {
    pub fn analyze(a: &SparseSym) -> Self {
        let n = a.dim();
        let perm = nested_dissection(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // permuted pattern with value positions
        let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for old_r in 0..n {
            for k in a.indptr()[old_r]..a.indptr()[old_r + 1] {
                rows[inv[old_r]].push((inv[a.indices()[k]], k));
            }
        }
        let mut c_indptr = vec![0; n + 1];
        let mut c_indices = Vec::with_capacity(a.nnz());
        let mut value_map = vec![0; a.nnz()];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for &(c, src) in row.iter() {
                value_map[src] = c_indices.len();
                c_indices.push(c);
            }
            c_indptr[r + 1] = c_indices.len();
        }

        // elimination tree
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &j in &c_indices[c_indptr[k]..c_indptr[k + 1]] {
                let mut i = j;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // column counts from row patterns
        let mut counts = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &c_indptr, &c_indices, &parent, &mut stack, &mut mark);
            for &j in &stack[top..n] {
                counts[j] += 1;
            }
        }
        let mut l_colptr = vec![0; n + 1];
        for j in 0..n {
            l_colptr[j + 1] = l_colptr[j] + counts[j];
        }
        Self {
            n,
            perm,
            c_indptr,
            c_indices,
            value_map,
            parent,
            l_colptr,
            src_indptr: a.indptr().to_vec(),
            src_indices: a.indices().to_vec(),
        }
    }

    pub fn nnz_factor(&self) -> usize {
        self.l_colptr[self.n]
    }

    /// Multiply-add count of the numeric factorization.
    pub fn factor_work(&self) -> f64 {
        self.l_colptr.windows(2).map(|w| ((w[1] - w[0]) as f64).powi(2)).sum()
    }

    fn matches(&self, a: &CsrMatrix) -> bool {
        a.indptr() == self.src_indptr.as_slice() && a.indices() == self.src_indices.as_slice()
    }
}

/// Row pattern of L(k, :) in topological order as `stack[top..n]`.
fn ereach(k: usize, indptr: &[usize], indices: &[usize], parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for &j in &indices[indptr[k]..indptr[k + 1]] {
        if j >= k {
            continue;
        }
        let mut len = 0;
        let mut i = j;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// Numeric factor `P A P^T = L L^T`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    colptr: Vec<usize>,
    rowind: Vec<u32>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    pub fn factor(symbolic: &SymbolicCholesky, a: &SparseSym) -> Result<Self> {
        if !symbolic.matches(a) {
            return Err(Error::validation("matrix pattern differs from the analysed pattern"));
        }
        let n = symbolic.n;
        let mut cvals = vec![0.0; a.nnz()];
        for (src, &dst) in symbolic.value_map.iter().enumerate() {
            cvals[dst] = a.values()[src];
        }
        let cp = &symbolic.c_indptr;
        let ci = &symbolic.c_indices;
        let lp = &symbolic.l_colptr;
        let nnz = lp[n];
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0; nnz];
        let mut next: Vec<usize> = lp[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, cp, ci, &symbolic.parent, &mut stack, &mut mark);
            for p in cp[k]..cp[k + 1] {
                if ci[p] <= k {
                    x[ci[p]] = cvals[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for (&r, &v) in li[lp[i] + 1..next[i]].iter().zip(&lx[lp[i] + 1..next[i]]) {
                    x[r as usize] -= v * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k as u32;
                lx[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    pivot: symbolic.perm[k],
                    value: d,
                });
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k as u32;
            lx[p] = d.sqrt();
        }
        Ok(Self {
            n,
            perm: symbolic.perm.clone(),
            colptr: lp.clone(),
            rowind: li,
            values: lx,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.solve_into(b, &mut out);
        out
    }

    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let (lp, li, lx) = (&self.colptr, &self.rowind, &self.values);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..self.n {
            let (s, e) = (lp[j], lp[j + 1]);
            let yj = y[j] / lx[s];
            y[j] = yj;
            for (&r, &v) in li[s + 1..e].iter().zip(&lx[s + 1..e]) {
                y[r as usize] -= v * yj;
            }
        }
        for j in (0..self.n).rev() {
            let (s, e) = (lp[j], lp[j + 1]);
            let acc: f64 = li[s + 1..e].iter().zip(&lx[s + 1..e]).map(|(&r, &v)| v * y[r as usize]).sum();
            y[j] = (y[j] - acc) / lx[s];
        }
        for (&o, v) in self.perm.iter().zip(y) {
            out[o] = v;
        }
    }
}

impl Preconditioner for CholeskyFactor {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve_into(r, z);
    }
}

/// Factorizations above this many multiply-adds are not attempted; PCG then
/// falls back to the Jacobi preconditioner.
pub const FACTOR_WORK_LIMIT: f64 = 2e9;

/// Sparse Cholesky factor reused as a PCG preconditioner across a sequence
/// of matrices with a fixed pattern and slowly varying values. The factor is
/// refreshed when PCG needs more than `refresh_above` iterations. Patterns
/// whose factor would cost more than [`FACTOR_WORK_LIMIT`] use Jacobi PCG.
#[derive(Clone, Debug)]
pub struct LaggedCholesky {
    symbolic: Option<SymbolicCholesky>,
    factor: Option<CholeskyFactor>,
    refresh_above: usize,
    refactorizations: usize,
}

impl LaggedCholesky {
    pub fn new(refresh_above: usize) -> Self {
        Self {
            symbolic: None,
            factor: None,
            refresh_above,
            refactorizations: 0,
        }
    }

    pub fn refactorizations(&self) -> usize {
        self.refactorizations
    }

    fn refresh(&mut self, a: &SparseSym) -> Result<()> {
        if !self.symbolic.as_ref().is_some_and(|s| s.matches(a)) {
            self.symbolic = Some(SymbolicCholesky::analyze(a));
        }
        let sym = self.symbolic.as_ref().expect("analysed above");
        self.factor = Some(CholeskyFactor::factor(sym, a)?);
        self.refactorizations += 1;
        Ok(())
    }

    /// Solve `A x = b` starting from `x`.
    pub fn solve(&mut self, a: &SparseSym, b: &[f64], x: &mut [f64], tol: f64) -> Result<super::SolveStats> {
        let stale = match (&self.symbolic, &self.factor) {
            (Some(s), Some(_)) => !s.matches(a),
            _ => true,
        };
        if stale {
            if !self.symbolic.as_ref().is_some_and(|s| s.matches(a)) {
                self.symbolic = Some(SymbolicCholesky::analyze(a));
            }
            if self.symbolic.as_ref().is_some_and(|s| s.factor_work() > FACTOR_WORK_LIMIT) {
                return super::pcg(a, b, x, &super::Jacobi::new(a), tol);
            }
            self.refresh(a)?;
        }
        let start = x.to_vec();
        match super::pcg(a, b, x, self.factor.as_ref().expect("factor present"), tol) {
            Ok(stats) => {
                if stats.iterations > self.refresh_above {
                    self.factor = None;
                }
                Ok(stats)
            }
            Err(Error::NonConvergence { .. }) => {
                self.refresh(a)?;
                x.copy_from_slice(&start);
                super::pcg(a, b, x, self.factor.as_ref().expect("factor present"), tol)
            }
            Err(e) => Err(e),
        }
    }
}

/// Nested dissection from breadth-first level structures: the middle level
/// of a BFS from a pseudo-peripheral node separates the remaining nodes.
fn nested_dissection(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut order = Vec::with_capacity(n);
    let mut owner = vec![0usize; n];
    let mut level = vec![NONE; n];
    let mut next_id = 1;
    // separators are emitted after both halves, so process with an explicit post-order
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut tasks = vec![Task::Split((0..n).collect())];
    while let Some(task) = tasks.pop() {
        let nodes = match task {
            Task::Emit(sep) => {
                order.extend(sep);
                continue;
            }
            Task::Split(nodes) => nodes,
        };
        if nodes.len() <= LEAF_SIZE {
            order.extend(nodes);
            continue;
        }
        let id = next_id;
        next_id += 1;
        for &v in &nodes {
            owner[v] = id;
        }
        let start = pseudo_peripheral(a, nodes[0], id, &owner, &mut level);
        let levels = bfs_levels(a, start, id, &owner, &mut level);
        let reached: usize = levels.iter().map(|l| l.len()).sum();
        if reached < nodes.len() {
            // disconnected subset: split off the reached component
            let comp: Vec<usize> = levels.into_iter().flatten().collect();
            let rest: Vec<usize> = nodes.iter().copied().filter(|&v| level[v] == NONE).collect();
            for &v in &comp {
                level[v] = NONE;
            }
            tasks.push(Task::Split(rest));
            tasks.push(Task::Split(comp));
            continue;
        }
        for &v in &nodes {
            level[v] = NONE;
        }
        if levels.len() < 3 {
            order.extend(nodes);
            continue;
        }
        let mid = levels.len() / 2;
        let left: Vec<usize> = levels[..mid].iter().flatten().copied().collect();
        let right: Vec<usize> = levels[mid + 1..].iter().flatten().copied().collect();
        let sep = levels[mid].clone();
        tasks.push(Task::Emit(sep));
        tasks.push(Task::Split(right));
        tasks.push(Task::Split(left));
    }
    debug_assert_eq!(order.len(), n);
    order
}

fn bfs_levels(a: &CsrMatrix, start: usize, id: usize, owner: &[usize], level: &mut [usize]) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![start]];
    level[start] = 0;
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            let (nbrs, _) = a.row(v);
            for &w in nbrs {
                if owner[w] == id && level[w] == NONE {
                    level[w] = levels.len();
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    levels
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, id: usize, owner: &[usize], level: &mut [usize]) -> usize {
    let mut start = seed;
    let mut depth = 0;
    for _ in 0..4 {
        let levels = bfs_levels(a, start, id, owner, level);
        for l in &levels {
            for &v in l {
                level[v] = NONE;
            }
        }
        if levels.len() <= depth {
            break;
        }
        depth = levels.len();
        // lowest-degree node of the last level
        let last = levels.last().unwrap();
        start = *last.iter().min_by_key(|&&v| a.row(v).0.len()).unwrap();
    }
    start
}
