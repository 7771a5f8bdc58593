use alloc::vec;
use alloc::vec::Vec;

use crate::error::SolveError;
use crate::fespace::FECombo;
use crate::linalg::{axpy, dot, Cholesky, CsrMatrix};
use crate::mesh::Mesh;
use crate::stokes::{assemble, StokesSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupOptions {
    /// Number of smallest eigenvalues to report.
    pub k: usize,
    /// Relative residual tolerance on the Ritz pairs.
    pub rtol: f64,
    pub max_iter: usize,
    /// Eigenvalues below `floor * lambda_max` count as zero.
    pub floor: f64,
}

impl Default for InfSupOptions {
    fn default() -> Self {
        InfSupOptions { k: 3, rtol: 1e-8, max_iter: 3000, floor: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupResult {
    pub beta: f64,
    /// Smallest eigenvalues of `B A^-1 B^T q = lambda Mp q` on the
    /// complement of constants, ascending.
    pub spectrum: Vec<f64>,
    pub deflated: usize,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pressure Schur complement `S = B A^-1 B^T` with the velocity Dirichlet
/// dofs eliminated, and the pressure mass matrix.
pub struct SchurOperator {
    blocks: Vec<(CsrMatrix, Cholesky)>,
    mass: CsrMatrix,
    mass_factor: Cholesky,
}

impl SchurOperator {
    pub fn new(sys: &StokesSystem) -> Result<SchurOperator, SolveError> {
        let rows: Vec<usize> = (0..sys.n_pressure()).collect();
        let mut blocks = Vec::new();
        for k in 0..sys.dim() {
            let free = sys.free_dofs(k);
            if free.is_empty() {
                continue;
            }
            let a = sys.a[k].select(&free, &free);
            blocks.push((sys.b[k].select(&rows, &free), Cholesky::factor(&a)?));
        }
        Ok(SchurOperator { blocks, mass: sys.mp.clone(), mass_factor: Cholesky::factor(&sys.mp)? })
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        for (b, chol) in &self.blocks {
            let mut t = b.tr_mul_vec(q);
            chol.solve_in_place(&mut t);
            axpy(1.0, &b.mul_vec(&t), &mut out);
        }
        out
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `q^T S q / q^T M q`.
    pub fn rayleigh(&self, q: &[f64]) -> f64 {
        dot(q, &self.apply(q)) / dot(q, &self.mass.mul_vec(q))
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        d = a[i] - x - if i == 0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -f64::EPSILON * (libm::fabs(a[i]) + libm::fabs(x)).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `i`-th smallest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiag_eigenvalue(a: &[f64], b: &[f64], i: usize) -> f64 {
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..n {
        let r = if j > 0 { libm::fabs(b[j - 1]) } else { 0.0 } + if j + 1 < n { libm::fabs(b[j]) } else { 0.0 };
        lo = lo.min(a[j] - r);
        hi = hi.max(a[j] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) > i {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift I) x = rhs` for a symmetric tridiagonal `T` by LU
/// with partial pivoting.
fn tridiag_solve(a: &[f64], b: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = a.len();
    let mut d: Vec<f64> = a.iter().map(|v| v - shift).collect();
    let mut dl = b.to_vec();
    let mut du = b.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        if libm::fabs(d[i]) >= libm::fabs(dl[i]) {
            if d[i] != 0.0 {
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            }
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = d[i + 1];
            d[i + 1] = t - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            swapped[i] = true;
        }
    }
    let tiny = 1e-300;
    for x in d.iter_mut() {
        if *x == 0.0 {
            *x = tiny;
        }
    }
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let t = rhs[i] - dl[i] * rhs[i + 1];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = t;
        } else {
            rhs[i + 1] -= dl[i] * rhs[i];
        }
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= du[i] * rhs[i + 1];
        }
        if i + 2 < n {
            s -= du2[i] * rhs[i + 2];
        }
        rhs[i] = s / d[i];
    }
}

/// Unit eigenvector of the tridiagonal for eigenvalue `theta` by inverse iteration.
fn tridiag_eigenvector(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let n = a.len();
    let scale = a.iter().chain(b).map(|x| libm::fabs(*x)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let shift = theta + 1e-14 * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * libm::sin(i as f64 + 0.5)).collect();
    for _ in 0..3 {
        tridiag_solve(a, b, shift, &mut x);
        let nx = libm::sqrt(dot(&x, &x));
        x.iter_mut().for_each(|v| *v /= nx);
    }
    x
}

/// Smallest eigenvalues of `S q = lambda M q` orthogonal to constants, by
/// Lanczos in the M inner product with full reorthogonalization.
pub fn smallest_eigenvalues(op: &SchurOperator, opts: InfSupOptions) -> InfSupResult {
    let n = op.dim();
    let mass = op.mass();
    let one = vec![1.0; n];
    let m_one = mass.mul_vec(&one);
    let one_norm2 = dot(&one, &m_one);
    let deflate = |v: &mut Vec<f64>| {
        let c = dot(&m_one, v) / one_norm2;
        axpy(-c, &one, v);
    };
    let max_iter = opts.max_iter.min(n.saturating_sub(1)).max(1);
    let k = opts.k.max(1);

    let mut v: Vec<f64> = (0..n).map(|i| libm::sin(1.0 + 0.37 * i as f64) + 0.5 * libm::cos(0.11 * (i * i) as f64)).collect();
    deflate(&mut v);
    let nv = libm::sqrt(dot(&v, &mass.mul_vec(&v)));
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut next_check = 10;
    let mut converged = false;
    let mut ritz: Vec<f64> = Vec::new();
    let mut lambda_max = 0.0;
    let mut vectors: Vec<Vec<f64>> = Vec::new();

    for j in 0..max_iter {
        let mv = mass.mul_vec(&v);
        let z = op.apply(&v);
        let a = dot(&v, &z);
        let mut r = z;
        op.mass_factor.solve_in_place(&mut r);
        axpy(-a, &v, &mut r);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut r);
        }
        basis.push(v.clone());
        mbasis.push(mv);
        alpha.push(a);
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&mbasis) {
                let c = dot(mq, &r);
                axpy(-c, q, &mut r);
            }
            deflate(&mut r);
        }
        let b = libm::sqrt(dot(&r, &mass.mul_vec(&r)).max(0.0));
        let m = alpha.len();
        let exhausted = b <= 1e-13 * libm::fabs(a).max(f64::MIN_POSITIVE) || j + 1 == max_iter;
        if m >= next_check || exhausted {
            next_check = m + (m / 8).max(10);
            let kk = k.min(m);
            let offd = &beta[..m - 1];
            lambda_max = tridiag_eigenvalue(&alpha, offd, m - 1);
            ritz.clear();
            vectors.clear();
            let mut ok = true;
            for i in 0..kk {
                let theta = tridiag_eigenvalue(&alpha, offd, i);
                let s = tridiag_eigenvector(&alpha, offd, theta);
                let res = b * libm::fabs(s[m - 1]);
                if res > opts.rtol * theta.max(1e-6 * lambda_max) {
                    ok = false;
                }
                ritz.push(theta);
                vectors.push(s);
            }
            if (ok && kk == k) || exhausted {
                converged = ok || b <= 1e-13 * libm::fabs(a).max(f64::MIN_POSITIVE);
                break;
            }
        }
        beta.push(b);
        v = r.iter().map(|x| x / b).collect();
    }

    // recompute the smallest eigenvalue as a Rayleigh quotient of its Ritz vector
    if let Some(s) = vectors.first() {
        let mut y = vec![0.0; n];
        for (q, &c) in basis.iter().zip(s) {
            axpy(c, q, &mut y);
        }
        let rq = op.rayleigh(&y);
        if rq.is_finite() && rq >= 0.0 {
            ritz[0] = ritz[0].min(rq).max(0.0);
        }
    }
    let lmin = ritz.first().copied().unwrap_or(0.0).max(0.0);
    let beta_h = if lmin <= opts.floor * lambda_max { 0.0 } else { libm::sqrt(lmin) };
    InfSupResult { beta: beta_h, spectrum: ritz, deflated: 1, lambda_max, iterations: alpha.len(), converged }
}

/// Discrete inf-sup constant of `combo` on `mesh` with homogeneous
/// Dirichlet velocity data.
pub fn infsup_constant(mesh: &Mesh, combo: &FECombo, opts: InfSupOptions) -> Result<InfSupResult, SolveError> {
    let sys = assemble(mesh, combo)?;
    let op = SchurOperator::new(&sys)?;
    Ok(smallest_eigenvalues(&op, opts))
}
