use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::MacroError;
use crate::fespace::{FECombo, SpaceTag};
use crate::macroelement::{classify_2d, family_2d, predict_regularity, Family2d, MacroElement, Tolerances};
use crate::mesh::{CellKind, Mesh};
use crate::stokes::assemble;

/// Local divergence operator of one macro-element with zero velocity trace
/// on its boundary.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub submesh: Mesh,
    /// Global index of each submesh vertex; the center comes first.
    pub vertices: Vec<usize>,
    /// `B_M^T`: interior velocity dofs by pressure dofs.
    pub bt: DMatrix<f64>,
    pub mp: DMatrix<f64>,
}

impl LocalOperator {
    pub fn new(mesh: &Mesh, m: &MacroElement, combo: &FECombo) -> Result<LocalOperator, MacroError> {
        let submesh = m.submesh(mesh)?;
        let sys = assemble(&submesh, combo)?;
        let b = sys.b_interior();
        assert!(b.ncols() > 0, "macro-element without interior velocity dofs");
        Ok(LocalOperator {
            vertices: m.local_vertices(mesh),
            bt: b.to_dense().transpose(),
            mp: sys.mp.to_dense(),
            submesh,
        })
    }

    pub fn n_pressure(&self) -> usize {
        self.bt.ncols()
    }

    /// `|B^T p| / (|B^T|_2 |p|)`.
    pub fn relative_residual(&self, p: &[f64]) -> f64 {
        let pv = DVector::from_column_slice(p);
        let sigma_max = self.bt.singular_values().max();
        (&self.bt * &pv).norm() / (sigma_max * pv.norm())
    }
}

/// Pressures annihilated by every local divergence, modulo constants.
#[derive(Debug, Clone)]
pub struct LocalNullspace {
    pub dim: usize,
    /// Mp-orthogonal to constants, in submesh dof order.
    pub basis: Vec<Vec<f64>>,
    /// Singular values of `B_M^T` on the complement of constants, descending.
    pub singular_values: Vec<f64>,
}

/// Relative floor under which a singular value counts as zero.
pub const NULL_TOL: f64 = 1e-10;

pub fn local_nullspace(mesh: &Mesh, m: &MacroElement, combo: &FECombo) -> Result<LocalNullspace, MacroError> {
    let op = LocalOperator::new(mesh, m, combo)?;
    Ok(nullspace_of(&op))
}

pub fn nullspace_of(op: &LocalOperator) -> LocalNullspace {
    let np = op.n_pressure();
    let nint = op.bt.nrows();
    let l = op.mp.clone().cholesky().expect("pressure mass matrix is positive definite").unpack();
    // Householder reflector sending L^T 1 to a multiple of e_1; its last
    // columns span the Mp-complement of constants in the L^T coordinates.
    let y1 = l.transpose() * DVector::from_element(np, 1.0);
    let mut u = y1.clone();
    u[0] += libm::copysign(y1.norm(), y1[0]);
    let h = DMatrix::identity(np, np) - (&u * u.transpose()) * (2.0 / u.dot(&u));
    let q = h.columns(1, np - 1).into_owned();
    let z = l.transpose().solve_upper_triangular(&q).expect("triangular factor is regular");
    let k = &op.bt * &z;
    let rows = nint.max(np - 1);
    let mut kp = DMatrix::zeros(rows, np - 1);
    kp.view_mut((0, 0), (nint, np - 1)).copy_from(&k);
    let svd = kp.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let mut basis = Vec::new();
    for (&i, &s) in order.iter().zip(&singular_values) {
        if s <= NULL_TOL * smax || smax == 0.0 {
            let v = vt.row(i).transpose();
            basis.push((&z * v).iter().copied().collect());
        }
    }
    LocalNullspace { dim: basis.len(), basis, singular_values }
}

/// Piecewise linear pressure vanishing at the center with slopes
/// `-1/|M+|` above and `1/|M-|` below the line through the center
/// (`axis = 1`), or left/right of it (`axis = 0`).
fn split_profile(mesh: &Mesh, m: &MacroElement, axis: usize, tol: f64) -> Vec<f64> {
    let c = mesh.vertex(m.center)[axis];
    let (mut plus, mut minus) = (0.0, 0.0);
    for (&cell, &a) in m.cells.iter().zip(&m.areas) {
        if mesh.cell_centroid(cell)[axis] > c {
            plus += a;
        } else {
            minus += a;
        }
    }
    m.local_vertices(mesh)
        .iter()
        .map(|&v| {
            let d = mesh.vertex(v)[axis] - c;
            if d > tol {
                -d / plus
            } else if d < -tol {
                d / minus
            } else {
                0.0
            }
        })
        .collect()
}

/// Null pressure of a P2 star with an even ring, no aligned vertex and
/// `S = 0`: on the cell between ring vertices `k` and `k+1` it reads
/// `b_k x + c_k y` with `b_k = (-1)^k b / alpha_k`.
fn quadratic_even_profile(mesh: &Mesh, m: &MacroElement, swap: bool) -> Vec<f64> {
    let p = |v: usize| {
        let q = mesh.vertex(v);
        if swap {
            [q[1], q[0]]
        } else {
            [q[0], q[1]]
        }
    };
    let c = p(m.center);
    let mut ring: Vec<(f64, usize)> = m
        .ring_vertices
        .iter()
        .map(|&v| {
            let q = p(v);
            let mut a = libm::atan2(q[1] - c[1], q[0] - c[0]);
            if a < 0.0 {
                a += 2.0 * core::f64::consts::PI;
            }
            (a, v)
        })
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = ring.len();
    let d: Vec<[f64; 2]> = ring.iter().map(|r| {
        let q = p(r.1);
        [q[0] - c[0], q[1] - c[1]]
    }).collect();
    let alpha: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (d[k], d[(k + 1) % n]);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        })
        .collect();
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    // unknowns c_0 .. c_{n-1}, b
    let mut sys = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        let j = (i + n - 1) % n;
        sys[(i, i)] += d[i][1];
        sys[(i, j)] -= d[i][1];
        sys[(i, n)] = d[i][0] * (sign(i) / alpha[i] - sign(j) / alpha[j]);
    }
    for k in 0..n {
        sys[(n, k)] = alpha[k];
    }
    let svd = sys.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let imin = svd.singular_values.imin();
    let x = vt.row(imin);
    let b = x[n];
    let mut value = alloc::collections::BTreeMap::new();
    value.insert(m.center, 0.0);
    for (k, r) in ring.iter().enumerate() {
        value.insert(r.1, sign(k) * b / alpha[k] * d[k][0] + x[k] * d[k][1]);
    }
    m.local_vertices(mesh).iter().map(|v| value[v]).collect()
}

/// The explicit null pressure given by the singularity proofs, in the vertex
/// order of `MacroElement::local_vertices`, or `None` for a regular star.
pub fn analytic_singular_pressure(
    mesh: &Mesh,
    m: &MacroElement,
    combo: &FECombo,
    tol: Tolerances,
) -> Result<Option<Vec<f64>>, MacroError> {
    let atol = tol.alignment * m.diameter(mesh);
    if mesh.kind() == CellKind::Quadrilateral {
        use SpaceTag::*;
        let axis = match (combo.velocity_spaces.as_slice(), combo.pressure_space) {
            ([Q2, Q1], Q1) => 1,
            ([Q1, Q2], Q1) => 0,
            _ => return Err(MacroError::UnsupportedCombo("expected q2-q1:q1 or q1-q2:q1")),
        };
        let f = classify_2d(mesh, m, tol.alignment);
        let split = if axis == 1 { f.y_structured } else { f.x_structured };
        return Ok(split.then(|| split_profile(mesh, m, axis, atol)));
    }
    let verdict = predict_regularity(mesh, m, combo, tol)?;
    if verdict.is_regular() {
        return Ok(None);
    }
    let family = family_2d(combo)?;
    let swap = matches!(family, Family2d::Bubble { swap: true } | Family2d::Quadratic { swap: true });
    let axis = if swap { 0 } else { 1 };
    Ok(Some(match verdict.reason {
        crate::macroelement::VerdictReason::EvenNvSZero => quadratic_even_profile(mesh, m, swap),
        _ => split_profile(mesh, m, axis, atol),
    }))
}

/// Literal counterexample `a + c|y - y0|` on a quadrilateral macro.
pub fn quad_counterexample(mesh: &Mesh, m: &MacroElement, a: f64, c: f64) -> Vec<f64> {
    let y0 = mesh.vertex(m.center)[1];
    m.local_vertices(mesh).iter().map(|&v| a + c * libm::fabs(mesh.vertex(v)[1] - y0)).collect()
}
