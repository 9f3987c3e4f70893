//! ILU(0)-preconditioned restarted GMRES for the linear systems of the
//! nonlinear iterations. Matrices are the leading `n x n` block of a
//! [`CsrMatrix`], which is the free-node block because free nodes are
//! numbered first.

use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::{CsrMatrix, Pattern};

/// Incomplete LU factorization with the sparsity of the leading block.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Strict lower part holds `L` (unit diagonal implied), the rest `U`.
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Returns `None` on a zero or non-finite pivot.
    pub fn new(pattern: &Pattern, matrix: &CsrMatrix, n: usize) -> Option<Ilu0> {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        let mut diag = vec![0; n];
        for i in 0..n {
            for k in pattern.row_range(i) {
                let j = pattern.col(k);
                if j < n {
                    if j == i {
                        diag[i] = cols.len();
                    }
                    cols.push(j);
                    values.push(matrix.values[k]);
                }
            }
            row_ptr.push(cols.len());
        }

        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                pos[cols[k]] = k;
            }
            for k in start..diag[i] {
                let p = cols[k];
                let pivot = values[diag[p]];
                let factor = values[k] / pivot;
                values[k] = factor;
                for q in diag[p] + 1..row_ptr[p + 1] {
                    let slot = pos[cols[q]];
                    if slot != usize::MAX {
                        values[slot] -= factor * values[q];
                    }
                }
            }
            for k in start..end {
                pos[cols[k]] = usize::MAX;
            }
            let d = values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
        }
        Some(Ilu0 {
            n,
            row_ptr,
            cols,
            values,
            diag,
        })
    }

    /// Overwrites `x` with `(LU)^{-1} x`.
    pub fn apply(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let mut s = x[i];
            for k in self.row_ptr[i]..self.diag[i] {
                s -= self.values[k] * x[self.cols[k]];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[k] * x[self.cols[k]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}

/// `y = A[..n, ..n] x`.
pub fn leading_matvec(pattern: &Pattern, matrix: &CsrMatrix, n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        let mut s = 0.0;
        for k in pattern.row_range(i) {
            let j = pattern.col(k);
            if j < n {
                s += matrix.values[k] * x[j];
            }
        }
        y[i] = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with right ILU(0) preconditioning for `A x = rhs`, where
/// `apply(v, w)` sets `w = A v`. Starts from the given `x` and stops once
/// `|rhs - A x| <= tol`. The residual norm never increases.
pub fn gmres<F>(
    mut apply: F,
    ilu: &Ilu0,
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> LinearSolveStats
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        let beta = norm(&r);
        if beta <= tol || total >= max_iter || !beta.is_finite() {
            return LinearSolveStats {
                iterations: total,
                residual: beta,
                converged: beta <= tol,
            };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns after Givens rotations, i.e. the R factor.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut rot: Vec<(f64, f64)> = Vec::with_capacity(restart);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut steps = 0;
        while steps < restart && total < max_iter {
            z.copy_from_slice(&basis[steps]);
            ilu.apply(&mut z);
            apply(&z, &mut w);
            let mut h = vec![0.0; steps + 2];
            for (q, v) in basis.iter().enumerate() {
                h[q] = dot(&w, v);
                for i in 0..n {
                    w[i] -= h[q] * v[i];
                }
            }
            let next_norm = norm(&w);
            h[steps + 1] = next_norm;
            for (q, &(c, s)) in rot.iter().enumerate() {
                let (a, b) = (h[q], h[q + 1]);
                h[q] = c * a + s * b;
                h[q + 1] = -s * a + c * b;
            }
            let (a, b) = (h[steps], h[steps + 1]);
            let rho = libm::hypot(a, b);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (a / rho, b / rho)
            };
            h[steps] = rho;
            h[steps + 1] = 0.0;
            g[steps + 1] = -s * g[steps];
            g[steps] *= c;
            rot.push((c, s));
            hess.push(h);
            steps += 1;
            total += 1;
            if g[steps].abs() <= tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; steps];
        for q in (0..steps).rev() {
            let mut acc = g[q];
            for p in q + 1..steps {
                acc -= hess[p][q] * y[p];
            }
            y[q] = acc / hess[q][q];
        }
        for i in 0..n {
            z[i] = 0.0;
        }
        for (q, yq) in y.iter().enumerate() {
            for i in 0..n {
                z[i] += yq * basis[q][i];
            }
        }
        ilu.apply(&mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
}
