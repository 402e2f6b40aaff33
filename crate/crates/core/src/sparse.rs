//! Compressed sparse row matrices and a preconditioned conjugate gradient solver.

use serde::Serialize;

use crate::mesh::UnionFind;

/// Square matrix in CSR layout with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear, so assembly is deterministic.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().expect("entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// `max |a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Strongest definiteness statement certified by the diagonal dominance tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceVerdict {
    /// Strictly diagonally dominant with positive diagonal.
    PositiveDefinite,
    /// Positive diagonal, nonpositive off-diagonal, zero row sums and a
    /// connected off-diagonal pattern: semidefinite with kernel spanned by `(1, ..., 1)`.
    PsdRankDeficient1,
    Unknown,
}

/// Apply the two diagonal dominance tests to a symmetric matrix.
///
/// Row sums count as zero when `|sum| <= tol * max_i a_ii`.
pub fn diagonal_dominance_verdict(a: &CsrMatrix, tol: f64) -> DominanceVerdict {
    let n = a.dim();
    if n == 0 {
        return DominanceVerdict::Unknown;
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return DominanceVerdict::Unknown;
    }
    let strict = (0..n).all(|i| {
        let off: f64 = a.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
        diag[i] > off
    });
    if strict {
        return DominanceVerdict::PositiveDefinite;
    }
    let scale = diag.iter().fold(0.0f64, |m, &d| m.max(d));
    let sign_ok = (0..n).all(|i| a.row(i).all(|(j, v)| j == i || v <= 0.0));
    let sums_zero = a.row_sums().iter().all(|s| s.abs() <= tol * scale);
    if sign_ok && sums_zero {
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j != i && v < 0.0 {
                    uf.union(i, j);
                }
            }
        }
        if uf.count() == 1 {
            return DominanceVerdict::PsdRankDeficient1;
        }
    }
    DominanceVerdict::Unknown
}

/// Outcome of [`cg_solve`].
#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// (semi)definite `a`.
///
/// With `project_constants` the iteration runs in the complement of
/// `(1, ..., 1)`, which solves `a x = b` for matrices whose kernel is the
/// constants, provided `b` sums to zero. Stops once `|r| <= rel_tol * |b|`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    project_constants: bool,
) -> CgResult {
    let n = a.dim();
    let mut rhs = b.to_vec();
    if project_constants {
        remove_mean(&mut rhs);
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return CgResult { x, iterations: 0, residual: 0.0, converged: true };
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        if project_constants {
            remove_mean(&mut z);
        }
        z
    };

    let mut r = rhs;
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = bnorm;
    for it in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return CgResult { x, iterations: it, residual: res / bnorm, converged: false };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if project_constants {
            remove_mean(&mut r);
        }
        res = dot(&r, &r).sqrt();
        if res <= rel_tol * bnorm {
            if project_constants {
                remove_mean(&mut x);
            }
            return CgResult { x, iterations: it + 1, residual: res / bnorm, converged: true };
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    if project_constants {
        remove_mean(&mut x);
    }
    CgResult { x, iterations: max_iter, residual: res / bnorm, converged: false }
}
