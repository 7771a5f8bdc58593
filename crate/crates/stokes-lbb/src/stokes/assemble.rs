use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::SolveError;
use crate::fespace::{build_dofmap, eval_basis, quadrature, AffineMap, DofMap, FECombo, QuadratureRule, SpaceTag};
use crate::linalg::CsrMatrix;
use crate::mesh::{CellKind, Mesh, Point};

/// Discrete Stokes operators, one velocity block per component.
///
/// The saddle system is `[A, -B^T; -B, -eps M] [w; p] = [F; 0]` with
/// `A = diag(a[k])`, `B = [b[0] .. b[d-1]]`.
#[derive(Debug, Clone)]
pub struct StokesSystem {
    pub combo: FECombo,
    pub velocity_dofs: Vec<DofMap>,
    pub pressure_dofs: DofMap,
    /// Per-component stiffness `(grad phi_j, grad phi_i)`.
    pub a: Vec<CsrMatrix>,
    /// Per-component divergence blocks, `B_k[i][j] = (psi_i, d_k phi_j)`.
    pub b: Vec<CsrMatrix>,
    pub mp: CsrMatrix,
    pub rhs: Vec<Vec<f64>>,
    /// Dirichlet values per component, keyed by dof.
    pub bc: Vec<BTreeMap<usize, f64>>,
}

impl StokesSystem {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_dofs.n_dofs
    }

    pub fn velocity_sizes(&self) -> Vec<usize> {
        self.velocity_dofs.iter().map(|d| d.n_dofs).collect()
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity_sizes().iter().sum()
    }

    /// Divergence matrix over all velocity components.
    pub fn b_full(&self) -> CsrMatrix {
        let mut trip = Vec::new();
        let mut off = 0;
        for b in &self.b {
            trip.extend(b.triplets().map(|(i, j, v)| (i, j + off, v)));
            off += b.ncols();
        }
        CsrMatrix::from_triplets(self.n_pressure(), off, trip)
    }

    /// Divergence matrix restricted to velocity dofs without Dirichlet data.
    pub fn b_interior(&self) -> CsrMatrix {
        let rows: Vec<usize> = (0..self.n_pressure()).collect();
        let mut trip = Vec::new();
        let mut off = 0;
        for (k, b) in self.b.iter().enumerate() {
            let free = self.free_dofs(k);
            let sub = b.select(&rows, &free);
            trip.extend(sub.triplets().map(|(i, j, v)| (i, j + off, v)));
            off += free.len();
        }
        CsrMatrix::from_triplets(self.n_pressure(), off, trip)
    }

    /// Full symmetric saddle matrix, velocity first.
    pub fn saddle_matrix(&self, eps: f64) -> CsrMatrix {
        let nv = self.n_velocity();
        let n = nv + self.n_pressure();
        let mut trip = Vec::new();
        let mut off = 0;
        for (a, b) in self.a.iter().zip(&self.b) {
            trip.extend(a.triplets().map(|(i, j, v)| (i + off, j + off, v)));
            for (i, j, v) in b.triplets() {
                trip.push((nv + i, off + j, -v));
                trip.push((off + j, nv + i, -v));
            }
            off += a.nrows();
        }
        trip.extend(self.mp.triplets().map(|(i, j, v)| (nv + i, nv + j, -eps * v)));
        CsrMatrix::from_triplets(n, n, trip)
    }

    /// Dofs of component `k` without Dirichlet data, ascending.
    pub fn free_dofs(&self, k: usize) -> Vec<usize> {
        (0..self.velocity_dofs[k].n_dofs).filter(|d| !self.bc[k].contains_key(d)).collect()
    }

    /// Adds `(f_k, phi)` to every component load.
    pub fn add_load(&mut self, mesh: &Mesh, f: impl Fn(Point) -> [f64; 3]) -> Result<(), SolveError> {
        let rule = quadrature(mesh.kind(), load_degree(mesh.kind()))?;
        for k in 0..self.dim() {
            let dofs = &self.velocity_dofs[k];
            let tab = Table::new(dofs.space, mesh.kind(), &rule)?;
            for c in 0..mesh.num_cells() {
                let map = AffineMap::for_cell(mesh, c)?;
                let vol = mesh.cell_measure(c);
                let cd = dofs.cell_dofs(c);
                for q in 0..rule.len() {
                    let x = map.map(rule.reference_point(mesh.kind(), q));
                    let w = rule.weights[q] * vol * f(x)[k];
                    for (i, &gi) in cd.iter().enumerate() {
                        self.rhs[k][gi] += w * tab.values[q][i];
                    }
                }
            }
        }
        Ok(())
    }
}

fn load_degree(kind: CellKind) -> usize {
    match kind {
        CellKind::Triangle => 7,
        CellKind::Tetrahedron => 6,
        CellKind::Quadrilateral => 5,
    }
}

/// Exact for products of gradients and for pressure-times-gradient terms of
/// every supported combination.
fn assembly_degree(kind: CellKind) -> usize {
    match kind {
        CellKind::Triangle => 5,
        CellKind::Tetrahedron => 6,
        CellKind::Quadrilateral => 5,
    }
}

/// Basis values and reference gradients at every point of a rule.
pub(crate) struct Table {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 3]>>,
}

impl Table {
    pub fn new(tag: SpaceTag, kind: CellKind, rule: &QuadratureRule) -> Result<Table, SolveError> {
        let mut values = Vec::with_capacity(rule.len());
        let mut grads = Vec::with_capacity(rule.len());
        for q in 0..rule.len() {
            let b = eval_basis(tag, kind, &rule.reference_point(kind, q))?;
            values.push(b.values);
            grads.push(b.grads);
        }
        Ok(Table { values, grads })
    }
}

/// Assembles the operators with homogeneous Dirichlet data on every boundary
/// velocity dof and a zero load.
pub fn assemble(mesh: &Mesh, combo: &FECombo) -> Result<StokesSystem, SolveError> {
    let kind = mesh.kind();
    combo.check(kind)?;
    let rule = quadrature(kind, assembly_degree(kind))?;
    let pressure_dofs = build_dofmap(mesh, combo.pressure_space)?;
    let ptab = Table::new(combo.pressure_space, kind, &rule)?;
    let maps: Vec<AffineMap> = (0..mesh.num_cells())
        .map(|c| AffineMap::for_cell(mesh, c))
        .collect::<Result<_, _>>()?;

    let np = pressure_dofs.n_dofs;
    let mut mtrip = Vec::new();
    for c in 0..mesh.num_cells() {
        let vol = mesh.cell_measure(c);
        let pd = pressure_dofs.cell_dofs(c);
        for q in 0..rule.len() {
            let w = rule.weights[q] * vol;
            let v = &ptab.values[q];
            for (i, &gi) in pd.iter().enumerate() {
                for (j, &gj) in pd.iter().enumerate() {
                    mtrip.push((gi, gj, w * v[i] * v[j]));
                }
            }
        }
    }
    let mp = CsrMatrix::from_triplets(np, np, mtrip);

    let mut velocity_dofs = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut rhs = Vec::new();
    let mut bc = Vec::new();
    for (k, &tag) in combo.velocity_spaces.iter().enumerate() {
        let dofs = build_dofmap(mesh, tag)?;
        let tab = Table::new(tag, kind, &rule)?;
        let n = dofs.n_dofs;
        let mut atrip = Vec::new();
        let mut btrip = Vec::new();
        let mut phys = vec![[0.0; 3]; dofs.per_cell];
        for (c, map) in maps.iter().enumerate() {
            let vol = mesh.cell_measure(c);
            let vd = dofs.cell_dofs(c);
            let pd = pressure_dofs.cell_dofs(c);
            let mut ka = vec![0.0; vd.len() * vd.len()];
            let mut kb = vec![0.0; pd.len() * vd.len()];
            for q in 0..rule.len() {
                let w = rule.weights[q] * vol;
                for (i, g) in tab.grads[q].iter().enumerate() {
                    phys[i] = map.grad(*g);
                }
                for i in 0..vd.len() {
                    for j in 0..vd.len() {
                        let d: f64 = (0..3).map(|l| phys[i][l] * phys[j][l]).sum();
                        ka[i * vd.len() + j] += w * d;
                    }
                }
                let pv = &ptab.values[q];
                for i in 0..pd.len() {
                    for j in 0..vd.len() {
                        kb[i * vd.len() + j] += w * pv[i] * phys[j][k];
                    }
                }
            }
            for i in 0..vd.len() {
                for j in 0..vd.len() {
                    atrip.push((vd[i], vd[j], ka[i * vd.len() + j]));
                }
            }
            for i in 0..pd.len() {
                for j in 0..vd.len() {
                    btrip.push((pd[i], vd[j], kb[i * vd.len() + j]));
                }
            }
        }
        a.push(CsrMatrix::from_triplets(n, n, atrip));
        b.push(CsrMatrix::from_triplets(np, n, btrip));
        rhs.push(vec![0.0; n]);
        bc.push(dofs.boundary.iter().map(|&d| (d, 0.0)).collect());
        velocity_dofs.push(dofs);
    }
    Ok(StokesSystem { combo: combo.clone(), velocity_dofs, pressure_dofs, a, b, mp, rhs, bc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_kuhn_cube, gen_quad_macro, gen_structured_tri, Rect};

    fn combos_2d() -> Vec<FECombo> {
        ["p1-p1:p1", "p1b-p1:p1", "p1-p1b:p1", "p1b-p1b:p1", "p2-p1:p1", "p2-p2:p1"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    #[test]
    fn two_triangle_square_p1() {
        let m = Mesh::new(
            CellKind::Triangle,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![],
        )
        .unwrap();
        let s = assemble(&m, &"p1-p1:p1".parse().unwrap()).unwrap();
        assert_eq!(s.b[0].nrows(), 4);
        // mass matrix sums to the area
        let total: f64 = s.mp.triplets().map(|t| t.2).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_pressure_row_annihilates_interior_velocities() {
        let m = gen_structured_tri(4, 3, Rect::UNIT).unwrap();
        for combo in combos_2d() {
            let s = assemble(&m, &combo).unwrap();
            let ones = vec![1.0; s.n_pressure()];
            for k in 0..2 {
                let bt1 = s.b[k].tr_mul_vec(&ones);
                for d in s.free_dofs(k) {
                    assert!(bt1[d].abs() < 1e-13, "{combo}");
                }
            }
        }
    }

    #[test]
    fn stiffness_kills_constants_and_is_symmetric() {
        let meshes = [
            gen_structured_tri(3, 3, Rect::UNIT).unwrap(),
            gen_quad_macro([1.0, 0.5], [0.7, 1.3]).unwrap(),
            gen_kuhn_cube(1).unwrap(),
        ];
        let combos: [&str; 3] = ["p2-p1b:p1", "q2-q2:q1", "p1b-p1b-p1:p1"];
        for (m, c) in meshes.iter().zip(combos) {
            let s = assemble(m, &c.parse().unwrap()).unwrap();
            for (a, d) in s.a.iter().zip(&s.velocity_dofs) {
                let one = crate::fespace::interpolate(m, d, |_| 1.0);
                assert!(a.mul_vec(&one).iter().all(|v| v.abs() < 1e-12), "{c}");
                assert!(a.symmetry_defect() < 1e-14);
            }
            assert!(s.saddle_matrix(1e-10).symmetry_defect() < 1e-14);
        }
    }

    #[test]
    fn bubble_column_matches_closed_form() {
        // For linear p: (p, d_x bubble) = -(d_x p) * integral of the bubble.
        let m = gen_structured_tri(2, 2, Rect::UNIT).unwrap();
        let s = assemble(&m, &"p1b-p1:p1".parse().unwrap()).unwrap();
        let p: Vec<f64> = m.vertices().iter().map(|x| 0.3 + 2.0 * x[0] - x[1]).collect();
        let btp = s.b[0].tr_mul_vec(&p);
        let nv = m.num_vertices();
        for c in 0..m.num_cells() {
            let bubble_integral = 27.0 * 2.0 * m.cell_measure(c) / 120.0;
            assert!((btp[nv + c] + 2.0 * bubble_integral).abs() < 1e-14);
        }
    }
}
