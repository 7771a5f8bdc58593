use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{assemble, solve_penalized, SolveOptions, StokesSystem, Table};
use crate::error::SolveError;
use crate::fespace::{eval_basis, gauss_legendre_unit, quadrature, AffineMap, FECombo};
use crate::mesh::{Mesh, Point, TAG_LEFT, TAG_RIGHT, TAG_TOP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LidVariant {
    /// `u = 1` on the top edge, corners held at zero.
    DirichletLid,
    /// Unit normal derivative of `u` on the top edge.
    NeumannLid,
}

fn on_segment(x: Point, a: Point, b: Point) -> bool {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let cross = ax[0] * ab[1] - ax[1] * ab[0];
    let t = (ax[0] * ab[0] + ax[1] * ab[1]) / len2;
    libm::fabs(cross) <= 1e-10 * len2 && (-1e-12..=1.0 + 1e-12).contains(&t)
}

fn tagged_segments(mesh: &Mesh, tag: i32) -> Vec<(Point, Point)> {
    mesh.boundary_facets()
        .iter()
        .filter(|f| f.tag == tag)
        .map(|f| (mesh.vertex(f.vertices[0]), mesh.vertex(f.vertices[1])))
        .collect()
}

/// Lid-driven cavity on a tagged 2D rectangle; `v = 0` on the whole boundary.
pub fn cavity_problem(mesh: &Mesh, combo: &FECombo, variant: LidVariant) -> Result<StokesSystem, SolveError> {
    if mesh.dim() != 2 {
        return Err(SolveError::Dimension("cavity problems are two-dimensional"));
    }
    let top = tagged_segments(mesh, TAG_TOP);
    if top.is_empty() {
        return Err(SolveError::MissingTag(TAG_TOP));
    }
    let mut sides = tagged_segments(mesh, TAG_LEFT);
    sides.extend(tagged_segments(mesh, TAG_RIGHT));
    if sides.is_empty() {
        return Err(SolveError::MissingTag(TAG_LEFT));
    }
    let mut sys = assemble(mesh, combo)?;
    let u = &sys.velocity_dofs[0];
    let lid: Vec<bool> = (0..u.n_dofs)
        .map(|d| {
            let x = u.coords[d];
            u.is_boundary(d)
                && top.iter().any(|&(a, b)| on_segment(x, a, b))
                && !sides.iter().any(|&(a, b)| on_segment(x, a, b))
        })
        .collect();
    match variant {
        LidVariant::DirichletLid => {
            for (d, val) in sys.bc[0].iter_mut() {
                if lid[*d] {
                    *val = 1.0;
                }
            }
        }
        LidVariant::NeumannLid => {
            sys.bc[0].retain(|d, _| !lid[*d]);
            add_top_flux(mesh, &mut sys)?;
        }
    }
    Ok(sys)
}

/// Adds `int_top phi ds` to the first velocity component load.
fn add_top_flux(mesh: &Mesh, sys: &mut StokesSystem) -> Result<(), SolveError> {
    let fc = mesh.facet_cells();
    let (t, w) = gauss_legendre_unit(4);
    let dofs = &sys.velocity_dofs[0];
    for f in mesh.boundary_facets().iter().filter(|f| f.tag == TAG_TOP) {
        let key = crate::mesh::sorted_key(&f.vertices);
        let c = fc[&key][0];
        let map = AffineMap::for_cell(mesh, c)?;
        let (a, b) = (mesh.vertex(f.vertices[0]), mesh.vertex(f.vertices[1]));
        let len = libm::hypot(b[0] - a[0], b[1] - a[1]);
        for (ti, wi) in t.iter().zip(&w) {
            let x = [a[0] + ti * (b[0] - a[0]), a[1] + ti * (b[1] - a[1]), 0.0];
            let mut xi = map.pullback(x);
            for v in xi.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            let vals = eval_basis(dofs.space, mesh.kind(), &xi)?.values;
            for (i, &g) in dofs.cell_dofs(c).iter().enumerate() {
                sys.rhs[0][g] += wi * len * vals[i];
            }
        }
    }
    Ok(())
}

/// Smooth exact Stokes solution with a closed-form forcing term.
pub trait ExactSolution {
    fn velocity(&self, x: Point) -> [f64; 3];
    /// `grad[k][l] = d u_k / d x_l`.
    fn velocity_grad(&self, x: Point) -> [[f64; 3]; 3];
    fn pressure(&self, x: Point) -> f64;
    /// `-Laplace(u) + grad(p)`.
    fn forcing(&self, x: Point) -> [f64; 3];
}

/// Divergence-free vortex on the unit square with zero boundary trace and
/// zero-mean pressure.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigVortex;

impl ExactSolution for TrigVortex {
    fn velocity(&self, x: Point) -> [f64; 3] {
        let (sx, cx) = (libm::sin(2.0 * PI * x[0]), libm::cos(2.0 * PI * x[0]));
        let (sy, cy) = (libm::sin(2.0 * PI * x[1]), libm::cos(2.0 * PI * x[1]));
        [sy * (cx - 1.0), -sx * (cy - 1.0), 0.0]
    }

    fn velocity_grad(&self, x: Point) -> [[f64; 3]; 3] {
        let tp = 2.0 * PI;
        let (sx, cx) = (libm::sin(tp * x[0]), libm::cos(tp * x[0]));
        let (sy, cy) = (libm::sin(tp * x[1]), libm::cos(tp * x[1]));
        [
            [-tp * sy * sx, tp * cy * (cx - 1.0), 0.0],
            [-tp * cx * (cy - 1.0), tp * sx * sy, 0.0],
            [0.0; 3],
        ]
    }

    fn pressure(&self, x: Point) -> f64 {
        2.0 * PI * (libm::cos(2.0 * PI * x[1]) - libm::cos(2.0 * PI * x[0]))
    }

    fn forcing(&self, x: Point) -> [f64; 3] {
        let k = 4.0 * PI * PI;
        let (sx, cx) = (libm::sin(2.0 * PI * x[0]), libm::cos(2.0 * PI * x[0]));
        let (sy, cy) = (libm::sin(2.0 * PI * x[1]), libm::cos(2.0 * PI * x[1]));
        [
            k * sy * (2.0 * cx - 1.0) + k * sx,
            -k * sx * (2.0 * cy - 1.0) - k * sy,
            0.0,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_v: f64,
    pub h1_v: f64,
    pub l2_p: f64,
}

impl ErrorRow {
    pub fn values(&self) -> [f64; 5] {
        [self.l2_u, self.h1_u, self.l2_v, self.h1_v, self.l2_p]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub combo: FECombo,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// `log(e2/e1)/log(h2/h1)` between consecutive rows, in the order of
    /// [`ErrorRow::values`].
    pub fn orders(&self) -> Vec<[f64; 5]> {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let (ea, eb) = (a.values(), b.values());
                let lh = libm::log(b.h / a.h);
                [0, 1, 2, 3, 4].map(|i| libm::log(eb[i] / ea[i]) / lh)
            })
            .collect()
    }
}

/// L2 and H1-seminorm errors of a discrete 2D field against `exact`.
pub fn measure_errors(
    mesh: &Mesh,
    sys: &StokesSystem,
    velocity: &[Vec<f64>],
    pressure: &[f64],
    exact: &dyn ExactSolution,
) -> Result<ErrorRow, SolveError> {
    let kind = mesh.kind();
    let rule = quadrature(kind, 7)?;
    let vt: Vec<Table> = sys
        .velocity_dofs
        .iter()
        .map(|d| Table::new(d.space, kind, &rule))
        .collect::<Result<_, _>>()?;
    let pt = Table::new(sys.pressure_dofs.space, kind, &rule)?;
    let mut l2 = [0.0; 2];
    let mut h1 = [0.0; 2];
    let mut l2p = 0.0;
    for c in 0..mesh.num_cells() {
        let map = AffineMap::for_cell(mesh, c)?;
        let vol = mesh.cell_measure(c);
        for q in 0..rule.len() {
            let x = map.map(rule.reference_point(kind, q));
            let w = rule.weights[q] * vol;
            let ue = exact.velocity(x);
            let ge = exact.velocity_grad(x);
            for k in 0..2 {
                let dofs = &sys.velocity_dofs[k];
                let mut val = 0.0;
                let mut g = [0.0; 3];
                for (i, &d) in dofs.cell_dofs(c).iter().enumerate() {
                    val += velocity[k][d] * vt[k].values[q][i];
                    let gi = map.grad(vt[k].grads[q][i]);
                    for l in 0..2 {
                        g[l] += velocity[k][d] * gi[l];
                    }
                }
                l2[k] += w * (val - ue[k]) * (val - ue[k]);
                let (d0, d1) = (g[0] - ge[k][0], g[1] - ge[k][1]);
                h1[k] += w * (d0 * d0 + d1 * d1);
            }
            let mut pv = 0.0;
            for (i, &d) in sys.pressure_dofs.cell_dofs(c).iter().enumerate() {
                pv += pressure[d] * pt.values[q][i];
            }
            let dp = pv - exact.pressure(x);
            l2p += w * dp * dp;
        }
    }
    Ok(ErrorRow {
        h: mesh.metrics().h,
        l2_u: libm::sqrt(l2[0]),
        h1_u: libm::sqrt(h1[0]),
        l2_v: libm::sqrt(l2[1]),
        h1_v: libm::sqrt(h1[1]),
        l2_p: libm::sqrt(l2p),
    })
}

/// Solves the exact-solution problem on each mesh (homogeneous Dirichlet
/// data, closed-form forcing) and measures the errors.
pub fn convergence_study(
    combo: &FECombo,
    meshes: &[Mesh],
    exact: &dyn ExactSolution,
    opts: SolveOptions,
) -> Result<ErrorReport, SolveError> {
    let mut rows = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let mut sys = assemble(mesh, combo)?;
        sys.add_load(mesh, |x| exact.forcing(x))?;
        let sol = solve_penalized(&sys, opts)?;
        rows.push(measure_errors(mesh, &sys, &sol.velocity, &sol.pressure, exact)?);
    }
    Ok(ErrorReport { combo: combo.clone(), rows })
}
