use alloc::vec;
use alloc::vec::Vec;

use super::{axpy, dot, norm};
use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients for SPD operators. `x` holds the
/// initial guess on entry.
pub fn pcg(
    a: impl Fn(&[f64], &mut [f64]),
    prec: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> Result<IterStats, SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(IterStats { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= rtol {
            return Ok(IterStats { iterations: it, residual: res });
        }
        a(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::NoConvergence { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        // recompute the true residual now and then to avoid drift
        if (it + 1) % 50 == 0 {
            a(x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
        }
        res = norm(&r) / bnorm;
        prec(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= rtol {
        Ok(IterStats { iterations: max_iter, residual: res })
    } else {
        Err(SolveError::NoConvergence { iterations: max_iter, residual: res })
    }
}

/// Preconditioned MINRES for symmetric (possibly indefinite) operators with
/// an SPD preconditioner.
pub fn minres(
    a: impl Fn(&[f64], &mut [f64]),
    prec: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> Result<IterStats, SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(IterStats { iterations: 0, residual: 0.0 });
    }
    let mut v_old = vec![0.0; n];
    let mut v = vec![0.0; n];
    a(x, &mut v);
    for i in 0..n {
        v[i] = b[i] - v[i];
    }
    let mut z = vec![0.0; n];
    prec(&v, &mut z);
    let mut gamma = libm::sqrt(dot(&z, &v).max(0.0));
    let mut gamma_old = 1.0;
    let mut eta = gamma;
    let eta0 = gamma;
    let (mut s_old, mut s) = (0.0, 0.0);
    let (mut c_old, mut c) = (1.0, 1.0);
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];
    let mut z_new = vec![0.0; n];
    let mut it = 0;
    let check = |x: &[f64], scratch: &mut [f64]| {
        a(x, scratch);
        let r: Vec<f64> = b.iter().zip(scratch.iter()).map(|(bi, ai)| bi - ai).collect();
        norm(&r) / bnorm
    };
    while it < max_iter {
        if gamma == 0.0 || libm::fabs(eta) <= rtol * 1e-2 * eta0 {
            break;
        }
        it += 1;
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        a(&z, &mut az);
        let delta = dot(&az, &z);
        let mut v_new = vec![0.0; n];
        for i in 0..n {
            v_new[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i];
        }
        prec(&v_new, &mut z_new);
        let gamma_new = libm::sqrt(dot(&z_new, &v_new).max(0.0));
        let alpha0 = c * delta - c_old * s * gamma;
        let alpha1 = libm::sqrt(alpha0 * alpha0 + gamma_new * gamma_new);
        let alpha2 = s * delta + c_old * c * gamma;
        let alpha3 = s_old * gamma;
        let c_new = alpha0 / alpha1;
        let s_new = gamma_new / alpha1;
        let mut w_new = vec![0.0; n];
        for i in 0..n {
            w_new[i] = (z[i] - alpha3 * w_old[i] - alpha2 * w[i]) / alpha1;
        }
        axpy(c_new * eta, &w_new, x);
        eta *= -s_new;
        v_old = core::mem::replace(&mut v, v_new);
        core::mem::swap(&mut z, &mut z_new);
        w_old = core::mem::replace(&mut w, w_new);
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        if it % 25 == 0 && check(x, &mut az) <= rtol {
            break;
        }
    }
    let res = check(x, &mut az);
    if res <= rtol {
        Ok(IterStats { iterations: it, residual: res })
    } else {
        Err(SolveError::NoConvergence { iterations: it, residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    fn tridiag(n: usize, d: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn cg_solves_spd() {
        let a = tridiag(50, 2.5);
        let xe: Vec<f64> = (0..50).map(|i| i as f64 / 7.0).collect();
        let b = a.mul_vec(&xe);
        let mut x = vec![0.0; 50];
        let st = pcg(|u, y| a.mul_vec_into(u, y), |r, z| z.copy_from_slice(r), &b, &mut x, 1e-13, 500).unwrap();
        assert!(st.residual <= 1e-13);
        for i in 0..50 {
            assert!((x[i] - xe[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn minres_solves_indefinite() {
        // shift makes the operator indefinite
        let a = tridiag(40, 0.3);
        let xe: Vec<f64> = (0..40).map(|i| ((i * 3) % 7) as f64 - 3.0).collect();
        let b = a.mul_vec(&xe);
        let mut x = vec![0.0; 40];
        let st = minres(|u, y| a.mul_vec_into(u, y), |r, z| z.copy_from_slice(r), &b, &mut x, 1e-11, 2000).unwrap();
        assert!(st.residual <= 1e-11);
        let diag = a.to_dense().symmetric_eigenvalues();
        assert!(diag.iter().any(|&l| l < 0.0) && diag.iter().any(|&l| l > 0.0));
    }
}
