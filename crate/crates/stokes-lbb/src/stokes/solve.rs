use alloc::vec;
use alloc::vec::Vec;

use super::StokesSystem;
use crate::error::SolveError;
use crate::linalg::{minres, norm, pcg, Cholesky, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub eps: f64,
    /// Relative residual target of the pressure iteration.
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { eps: 1e-10, rtol: 1e-12, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Cholesky of each velocity block plus CG on the pressure Schur complement.
    SchurCg,
    /// MINRES on the whole saddle system, used when the Schur iteration stalls.
    Minres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
    /// Integral of the discrete pressure over the domain.
    pub pressure_integral: f64,
    /// `|A w - B^T p - F|` over free velocity dofs, relative to `|F| + |B^T p|`.
    pub momentum_residual: f64,
    /// `|B w + eps M p|` relative to the norm of the entrywise absolute sums.
    pub divergence_residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
}

struct Blocks {
    free: Vec<Vec<usize>>,
    fixed: Vec<Vec<usize>>,
    a_ii: Vec<CsrMatrix>,
    a_id: Vec<CsrMatrix>,
    b_i: Vec<CsrMatrix>,
    b_d: Vec<CsrMatrix>,
    w_d: Vec<Vec<f64>>,
    f_i: Vec<Vec<f64>>,
}

fn split(sys: &StokesSystem) -> Blocks {
    let rows: Vec<usize> = (0..sys.n_pressure()).collect();
    let mut bl = Blocks {
        free: vec![],
        fixed: vec![],
        a_ii: vec![],
        a_id: vec![],
        b_i: vec![],
        b_d: vec![],
        w_d: vec![],
        f_i: vec![],
    };
    for k in 0..sys.dim() {
        let free = sys.free_dofs(k);
        let fixed: Vec<usize> = sys.bc[k].keys().copied().collect();
        bl.a_ii.push(sys.a[k].select(&free, &free));
        bl.a_id.push(sys.a[k].select(&free, &fixed));
        bl.b_i.push(sys.b[k].select(&rows, &free));
        bl.b_d.push(sys.b[k].select(&rows, &fixed));
        bl.w_d.push(sys.bc[k].values().copied().collect());
        bl.f_i.push(free.iter().map(|&d| sys.rhs[k][d]).collect());
        bl.free.push(free);
        bl.fixed.push(fixed);
    }
    bl
}

/// Solves the penalized saddle system with pressure block `-eps M`.
pub fn solve_penalized(sys: &StokesSystem, opts: SolveOptions) -> Result<Solution, SolveError> {
    if !(opts.eps > 0.0) {
        return Err(SolveError::Dimension("penalty must be positive"));
    }
    let bl = split(sys);
    let d = sys.dim();
    let np = sys.n_pressure();
    let chol: Vec<Cholesky> = bl.a_ii.iter().map(Cholesky::factor).collect::<Result<_, _>>()?;
    let mchol = Cholesky::factor(&sys.mp)?;

    // g_k = F_I - A_ID w_D
    let g: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let t = bl.a_id[k].mul_vec(&bl.w_d[k]);
            bl.f_i[k].iter().zip(&t).map(|(f, t)| f - t).collect()
        })
        .collect();
    let ainv_g: Vec<Vec<f64>> = (0..d).map(|k| chol[k].solve(&g[k])).collect();
    let mut rhs = vec![0.0; np];
    for k in 0..d {
        let t1 = bl.b_i[k].mul_vec(&ainv_g[k]);
        let t2 = bl.b_d[k].mul_vec(&bl.w_d[k]);
        for i in 0..np {
            rhs[i] -= t1[i] + t2[i];
        }
    }
    let schur = |p: &[f64], out: &mut [f64]| {
        sys.mp.mul_vec_into(p, out);
        for v in out.iter_mut() {
            *v *= opts.eps;
        }
        for k in 0..d {
            let t = chol[k].solve(&bl.b_i[k].tr_mul_vec(p));
            let s = bl.b_i[k].mul_vec(&t);
            for i in 0..np {
                out[i] += s[i];
            }
        }
    };
    let prec = |r: &[f64], z: &mut [f64]| {
        z.copy_from_slice(r);
        mchol.solve_in_place(z);
    };
    let mut p = vec![0.0; np];
    let (iterations, method) = match pcg(schur, prec, &rhs, &mut p, opts.rtol, opts.max_iter) {
        Ok(st) => (st.iterations, SolveMethod::SchurCg),
        Err(SolveError::NoConvergence { .. }) => {
            let (w, pr, it) = minres_fallback(sys, &bl, &chol, &mchol, opts)?;
            return Ok(finish(sys, &bl, w, pr, it, SolveMethod::Minres, opts.eps));
        }
        Err(e) => return Err(e),
    };
    let mut w_i = Vec::with_capacity(d);
    for k in 0..d {
        let mut r = g[k].clone();
        let bt = bl.b_i[k].tr_mul_vec(&p);
        for (ri, bi) in r.iter_mut().zip(&bt) {
            *ri += bi;
        }
        w_i.push(chol[k].solve(&r));
    }
    Ok(finish(sys, &bl, w_i, p, iterations, method, opts.eps))
}

/// Free velocity components, pressure and iteration count.
type Reduced = (Vec<Vec<f64>>, Vec<f64>, usize);

/// MINRES on the reduced saddle system with block-diagonal preconditioner
/// `diag(A_II, M)`.
fn minres_fallback(
    sys: &StokesSystem,
    bl: &Blocks,
    chol: &[Cholesky],
    mchol: &Cholesky,
    opts: SolveOptions,
) -> Result<Reduced, SolveError> {
    let d = sys.dim();
    let np = sys.n_pressure();
    let sizes: Vec<usize> = bl.free.iter().map(Vec::len).collect();
    let nv: usize = sizes.iter().sum();
    let mut b = vec![0.0; nv + np];
    let mut off = 0;
    for k in 0..d {
        let t = bl.a_id[k].mul_vec(&bl.w_d[k]);
        for i in 0..sizes[k] {
            b[off + i] = bl.f_i[k][i] - t[i];
        }
        let t2 = bl.b_d[k].mul_vec(&bl.w_d[k]);
        for i in 0..np {
            b[nv + i] += t2[i];
        }
        off += sizes[k];
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        let p = &x[nv..];
        let mut off = 0;
        y[nv..].iter_mut().for_each(|v| *v = 0.0);
        for k in 0..d {
            let w = &x[off..off + sizes[k]];
            let aw = bl.a_ii[k].mul_vec(w);
            let btp = bl.b_i[k].tr_mul_vec(p);
            for i in 0..sizes[k] {
                y[off + i] = aw[i] - btp[i];
            }
            let bw = bl.b_i[k].mul_vec(w);
            for i in 0..np {
                y[nv + i] -= bw[i];
            }
            off += sizes[k];
        }
        let mp = sys.mp.mul_vec(p);
        for i in 0..np {
            y[nv + i] -= opts.eps * mp[i];
        }
    };
    let prec = |r: &[f64], z: &mut [f64]| {
        let mut off = 0;
        for k in 0..d {
            z[off..off + sizes[k]].copy_from_slice(&r[off..off + sizes[k]]);
            chol[k].solve_in_place(&mut z[off..off + sizes[k]]);
            off += sizes[k];
        }
        z[nv..].copy_from_slice(&r[nv..]);
        mchol.solve_in_place(&mut z[nv..]);
    };
    let mut x = vec![0.0; nv + np];
    let st = minres(apply, prec, &b, &mut x, opts.rtol.max(1e-10), opts.max_iter)?;
    let mut w = Vec::with_capacity(d);
    let mut off = 0;
    for k in 0..d {
        w.push(x[off..off + sizes[k]].to_vec());
        off += sizes[k];
    }
    Ok((w, x[nv..].to_vec(), st.iterations))
}

fn finish(
    sys: &StokesSystem,
    bl: &Blocks,
    w_i: Vec<Vec<f64>>,
    p: Vec<f64>,
    iterations: usize,
    method: SolveMethod,
    eps: f64,
) -> Solution {
    let d = sys.dim();
    let np = sys.n_pressure();
    let mut velocity = Vec::with_capacity(d);
    for k in 0..d {
        let mut w = vec![0.0; sys.velocity_dofs[k].n_dofs];
        for (i, &dof) in bl.free[k].iter().enumerate() {
            w[dof] = w_i[k][i];
        }
        for (i, &dof) in bl.fixed[k].iter().enumerate() {
            w[dof] = bl.w_d[k][i];
        }
        velocity.push(w);
    }
    let mut mom2 = 0.0;
    let mut mom_scale2 = 0.0;
    let mut div = sys.mp.mul_vec(&p);
    div.iter_mut().for_each(|v| *v *= eps);
    let mut scale = div.iter().map(|v| libm::fabs(*v)).collect::<Vec<_>>();
    for k in 0..d {
        let aw = sys.a[k].mul_vec(&velocity[k]);
        let btp = sys.b[k].tr_mul_vec(&p);
        for &dof in &bl.free[k] {
            let r = aw[dof] - btp[dof] - sys.rhs[k][dof];
            mom2 += r * r;
            mom_scale2 += sys.rhs[k][dof] * sys.rhs[k][dof] + btp[dof] * btp[dof];
        }
        let bw = sys.b[k].mul_vec(&velocity[k]);
        for i in 0..np {
            div[i] += bw[i];
            let (idx, val) = sys.b[k].row(i);
            scale[i] += idx.iter().zip(val).map(|(&j, b)| libm::fabs(b * velocity[k][j])).sum::<f64>();
        }
    }
    let scale_norm = norm(&scale);
    let divergence_residual = if scale_norm > 0.0 { norm(&div) / scale_norm } else { 0.0 };
    let momentum_residual = if mom_scale2 > 0.0 { libm::sqrt(mom2 / mom_scale2) } else { libm::sqrt(mom2) };
    let ones = vec![1.0; np];
    let mp1 = sys.mp.mul_vec(&ones);
    let pressure_integral = mp1.iter().zip(&p).map(|(a, b)| a * b).sum();
    Solution { velocity, pressure: p, pressure_integral, momentum_residual, divergence_residual, iterations, method }
}
