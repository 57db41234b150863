//! Small dense linear algebra over any [`Real`]. Used for the ridge
//! normal equations and as an independent check on the large-scale
//! factorization in the shadowing sampler.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower Cholesky factor of a symmetric positive definite `n x n`
/// row-major matrix. Only the lower triangle of `a` is read.
pub fn cholesky<F: Real>(a: &[F], n: usize) -> Result<Vec<F>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut l = vec![F::zero(); n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > F::zero()) {
            return Err(Error::Singular);
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd<F: Real>(a: &[F], b: &[F]) -> Result<Vec<F>> {
    let n = b.len();
    let l = cholesky(a, n)?;
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}
