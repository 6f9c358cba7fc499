//! Compressed-row sparse matrices and a Jacobi-preconditioned CG solver.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Default relative residual for inner solves.
pub const DEFAULT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix, summing duplicate entries in input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order deterministic
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = alloc::vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
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

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries().fold(0.0, |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }

    /// Principal submatrix on the given indices (in that order).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = alloc::vec![usize::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            map[g] = k;
        }
        let mut t = Vec::new();
        for (k, &g) in keep.iter().enumerate() {
            for (j, v) in self.row(g) {
                if map[j] != usize::MAX {
                    t.push((k, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), t)
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = alloc::vec![alloc::vec![0.0; self.n]; self.n];
        for (i, j, v) in self.entries() {
            d[i][j] = v;
        }
        d
    }
}

/// `y = A x`, summing each row left to right.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: x.len() });
    }
    let mut y = alloc::vec![0.0; a.n];
    spmv_into(a, x, &mut y);
    Ok(y)
}

fn spmv_into(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            s += a.values[k] * x[a.col_idx[k]];
        }
        *yi = s;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Outcome of [`solve_spd`]. `residual` is `‖b - A x‖ / ‖b‖` recomputed with [`spmv`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Conjugate gradients with diagonal preconditioning from a zero initial guess.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], rtol: f64, max_iter: usize) -> Result<SpdSolution> {
    solve_spd_from(a, b, None, rtol, max_iter)
}

/// As [`solve_spd`], starting from `x0` when given.
///
/// When the recursive residual claims convergence but the recomputed one does not,
/// the iteration restarts from the current iterate until `max_iter` is spent.
pub fn solve_spd_from(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, rtol: f64, max_iter: usize) -> Result<SpdSolution> {
    let n = a.n;
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::Precondition(format!("diagonal entry {i} is {}", diag[i])));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(SpdSolution { x: alloc::vec![0.0; n], residual: 0.0, iterations: 0, converged: true });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(Error::DimensionMismatch { expected: n, found: x0.len() }),
        None => alloc::vec![0.0; n],
    };
    let true_residual = |x: &[f64]| -> f64 {
        let mut ax = alloc::vec![0.0; n];
        spmv_into(a, x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        norm2(&r) / bnorm
    };

    let mut iterations = 0;
    let mut best = (true_residual(&x), x.clone());
    let mut r = alloc::vec![0.0; n];
    let mut z = alloc::vec![0.0; n];
    let mut p = alloc::vec![0.0; n];
    let mut ap = alloc::vec![0.0; n];
    loop {
        if best.0 <= rtol {
            break;
        }
        // (re)start
        spmv_into(a, &x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
            z[i] = inv_diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut stalled = true;
        while iterations < max_iter {
            spmv_into(a, &p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            stalled = false;
            if norm2(&r) / bnorm <= rtol {
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let res = true_residual(&x);
        if res < best.0 {
            best = (res, x.clone());
        }
        if best.0 <= rtol || iterations >= max_iter || stalled {
            break;
        }
        x.clone_from(&best.1);
    }
    let (residual, x) = best;
    Ok(SpdSolution { converged: residual <= rtol, x, residual, iterations })
}

/// Dense Cholesky factor for the small trace mass matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Factors a symmetric positive definite row-major matrix.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
        }
        let mut l = alloc::vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::Structural(format!("matrix is not positive definite at pivot {j}")));
            }
            let d = math::sqrt(d);
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(DenseCholesky { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
