//! Sparse storage, an envelope Cholesky factorization and Krylov solvers.

mod cholesky;
mod iterative;
mod sparse;

use alloc::vec::Vec;

pub use cholesky::{rcm_ordering, Cholesky};
pub use iterative::{minres, pcg, IterStats};
pub use sparse::CsrMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Largest singular value of `a` by power iteration on `a^T a`.
pub fn spectral_norm(a: &CsrMatrix, iterations: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // deterministic, non-symmetric start vector
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + libm::sin(1.0 + i as f64)).collect();
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let nx = norm(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul_vec(&x);
        let s = norm(&y);
        let z = a.tr_mul_vec(&y);
        if libm::fabs(s - sigma) <= 1e-12 * s {
            return s;
        }
        sigma = s;
        x = z;
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, -3.0), (2, 2, 2.0)]);
        assert!((spectral_norm(&a, 500) - 3.0).abs() < 1e-9);
    }
}
