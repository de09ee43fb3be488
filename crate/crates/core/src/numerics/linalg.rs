//! Small dense symmetric positive-definite solves (Cholesky).
//!
//! Problem sizes here are tiny (tens of variables), so a direct dense
//! factorization is both the fastest and the most predictable option.

use crate::error::{domain_err, Result};

/// Solve `A x = b` for symmetric positive-definite `A` (row-major, n×n).
/// Only the lower triangle (including the diagonal) is read, so callers may
/// leave the upper triangle unfilled. Nearly singular systems are retried
/// with a small diagonal jitter scaled to the matrix before giving up.
pub fn solve_spd(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let factor = CholeskyFactor::new(a, n)?;
    let mut x = b.to_vec();
    factor.solve_in_place(&mut x);
    Ok(x)
}

/// Prefactored lower Cholesky decomposition for repeated solves against the
/// same matrix.
pub struct CholeskyFactor {
    l: Vec<f64>,
    n: usize,
}

impl CholeskyFactor {
    /// Factor `a` (row-major n×n, lower triangle read). Retries with
    /// scaled diagonal jitter before declaring the matrix indefinite.
    pub fn new(a: &[f64], n: usize) -> Result<CholeskyFactor> {
        debug_assert_eq!(a.len(), n * n);
        let diag_scale = (0..n)
            .map(|i| a[i * n + i].abs())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut jitter = 0.0;
        for _ in 0..5 {
            let mut l = a.to_vec();
            if jitter > 0.0 {
                for i in 0..n {
                    l[i * n + i] += jitter;
                }
            }
            if cholesky_in_place(&mut l, n).is_ok() {
                return Ok(CholeskyFactor { l, n });
            }
            jitter = if jitter == 0.0 {
                diag_scale * 1e-12
            } else {
                jitter * 100.0
            };
        }
        domain_err("cholesky: matrix is not positive definite")
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        forward_substitute(&self.l, self.n, x);
        backward_substitute(&self.l, self.n, x);
    }
}

/// In-place lower Cholesky factor; fails if a pivot is not strictly positive.
fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return domain_err("cholesky: non-positive pivot");
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

fn forward_substitute(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

fn backward_substitute(l: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}
