use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{eval_basis, local_dim, AffineMap, SpaceTag};
use crate::error::FeError;
use crate::mesh::{CellKind, Mesh, Point};

/// Global numbering: vertex dofs first, then edge dofs (lexicographic edge
/// keys), then cell dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub space: SpaceTag,
    pub kind: CellKind,
    pub per_cell: usize,
    cell_dofs: Vec<usize>,
    pub n_dofs: usize,
    pub coords: Vec<Point>,
    pub boundary: BTreeSet<usize>,
}

impl DofMap {
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.per_cell..(c + 1) * self.per_cell]
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dofs.len() / self.per_cell
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary.contains(&dof)
    }
}

pub fn build_dofmap(mesh: &Mesh, tag: SpaceTag) -> Result<DofMap, FeError> {
    let kind = mesh.kind();
    let per_cell = local_dim(tag, kind)?;
    let nv = mesh.num_vertices();
    let nc = mesh.num_cells();
    let bmask = mesh.boundary_vertex_mask();
    let uses_edges = matches!(tag, SpaceTag::P2 | SpaceTag::Q2);
    let edges = if uses_edges { mesh.edges() } else { Default::default() };
    let ne = edges.len();

    let (vertex_base, edge_base, cell_base) = match tag {
        SpaceTag::P0 => (None, None, Some(0)),
        SpaceTag::P1 | SpaceTag::Q1 => (Some(0), None, None),
        SpaceTag::P1b => (Some(0), None, Some(nv)),
        SpaceTag::P2 => (Some(0), Some(nv), None),
        SpaceTag::Q2 => (Some(0), Some(nv), Some(nv + ne)),
    };
    let n_dofs = vertex_base.map_or(0, |_| nv) + edge_base.map_or(0, |_| ne) + cell_base.map_or(0, |_| nc);

    let mut coords = vec![[0.0; 3]; n_dofs];
    let mut boundary = BTreeSet::new();
    if vertex_base.is_some() {
        for v in 0..nv {
            coords[v] = mesh.vertex(v);
            if bmask[v] {
                boundary.insert(v);
            }
        }
    }
    if let Some(base) = edge_base {
        let bnd: BTreeSet<Vec<usize>> = mesh.topological_boundary().into_iter().collect();
        for (key, &e) in &edges {
            let (a, b) = (mesh.vertex(key[0]), mesh.vertex(key[1]));
            coords[base + e] = [0, 1, 2].map(|k| 0.5 * (a[k] + b[k]));
            if bnd.contains(&key[..]) {
                boundary.insert(base + e);
            }
        }
    }
    if let Some(base) = cell_base {
        for c in 0..nc {
            coords[base + c] = mesh.cell_centroid(c);
        }
    }

    let mut cell_dofs = Vec::with_capacity(nc * per_cell);
    for c in 0..nc {
        let cell = mesh.cell(c);
        if vertex_base.is_some() {
            cell_dofs.extend_from_slice(cell);
        }
        if let Some(base) = edge_base {
            for &[a, b] in kind.local_edges() {
                let (a, b) = (cell[a], cell[b]);
                cell_dofs.push(base + edges[&[a.min(b), a.max(b)]]);
            }
        }
        if let Some(base) = cell_base {
            cell_dofs.push(base + c);
        }
    }
    Ok(DofMap { space: tag, kind, per_cell, cell_dofs, n_dofs, coords, boundary })
}

/// Nodal interpolant of `f`. Bubble coefficients are chosen so the
/// interpolant matches `f` at the barycenter.
pub fn interpolate(mesh: &Mesh, dofs: &DofMap, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut u: Vec<f64> = dofs.coords.iter().map(|&x| f(x)).collect();
    if dofs.space == SpaceTag::P1b {
        let nv = mesh.num_vertices();
        for c in 0..mesh.num_cells() {
            let cell = mesh.cell(c);
            let mean = cell.iter().map(|&v| u[v]).sum::<f64>() / cell.len() as f64;
            u[nv + c] -= mean;
        }
    }
    u
}

/// Value and physical gradient of a discrete field at reference point `xi` of cell `c`.
pub fn evaluate(
    mesh: &Mesh,
    dofs: &DofMap,
    coeffs: &[f64],
    c: usize,
    xi: &[f64],
) -> Result<(f64, [f64; 3]), FeError> {
    let b = eval_basis(dofs.space, dofs.kind, xi)?;
    let map = AffineMap::for_cell(mesh, c).map_err(|_| FeError::OutsideReference)?;
    let mut val = 0.0;
    let mut g = [0.0; 3];
    for (i, &d) in dofs.cell_dofs(c).iter().enumerate() {
        val += coeffs[d] * b.values[i];
        let gi = map.grad(b.grads[i]);
        for k in 0..3 {
            g[k] += coeffs[d] * gi[k];
        }
    }
    Ok((val, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_kuhn_cube, gen_quad_macro, gen_structured_tri, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Mesh {
        Mesh::new(
            CellKind::Triangle,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn dof_counts_on_two_triangles() {
        let m = square();
        assert_eq!(build_dofmap(&m, SpaceTag::P2).unwrap().n_dofs, 9);
        assert_eq!(build_dofmap(&m, SpaceTag::P1b).unwrap().n_dofs, 6);
        assert_eq!(build_dofmap(&m, SpaceTag::P0).unwrap().n_dofs, 2);
        assert_eq!(build_dofmap(&m, SpaceTag::P1).unwrap().n_dofs, 4);
        assert!(build_dofmap(&m, SpaceTag::Q1).is_err());
        let p2 = build_dofmap(&m, SpaceTag::P2).unwrap();
        // every dof except the diagonal midpoint is on the boundary
        assert_eq!(p2.boundary.len(), 8);
    }

    #[test]
    fn dof_counts_general() {
        let m = gen_structured_tri(3, 2, Rect::UNIT).unwrap();
        let (nv, nc, ne) = (m.num_vertices(), m.num_cells(), m.edges().len());
        assert_eq!(ne, nv + nc - 1);
        assert_eq!(build_dofmap(&m, SpaceTag::P1b).unwrap().n_dofs, nv + nc);
        assert_eq!(build_dofmap(&m, SpaceTag::P2).unwrap().n_dofs, nv + ne);
        let q = gen_quad_macro([1.0, 1.0], [1.0, 1.0]).unwrap();
        assert_eq!(build_dofmap(&q, SpaceTag::Q2).unwrap().n_dofs, 25);
        assert_eq!(build_dofmap(&q, SpaceTag::Q1).unwrap().n_dofs, 9);
        let t = gen_kuhn_cube(1).unwrap();
        assert_eq!(build_dofmap(&t, SpaceTag::P1b).unwrap().n_dofs, 8 + 6);
    }

    #[test]
    fn shared_dofs_sit_at_the_same_point() {
        let m = gen_structured_tri(3, 3, Rect::UNIT).unwrap();
        for tag in [SpaceTag::P1, SpaceTag::P1b, SpaceTag::P2] {
            let d = build_dofmap(&m, tag).unwrap();
            let nodes = super::super::local_nodes(tag, m.kind()).unwrap();
            for c in 0..m.num_cells() {
                let map = AffineMap::for_cell(&m, c).unwrap();
                for (i, &g) in d.cell_dofs(c).iter().enumerate() {
                    let x = map.map(nodes[i]);
                    for k in 0..2 {
                        assert!((x[k] - d.coords[g][k]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    fn reproduce(mesh: &Mesh, tag: SpaceTag, f: impl Fn(Point) -> f64 + Copy) {
        let d = build_dofmap(mesh, tag).unwrap();
        let u = interpolate(mesh, &d, f);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = rng.random_range(0..mesh.num_cells());
            let mut xi = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            if mesh.kind() != CellKind::Quadrilateral {
                let s: f64 = xi[..mesh.dim()].iter().sum::<f64>() + rng.random_range(0.0..1.0);
                for v in &mut xi {
                    *v /= s;
                }
            }
            let (val, _) = evaluate(mesh, &d, &u, c, &xi).unwrap();
            let x = AffineMap::for_cell(mesh, c).unwrap().map(xi);
            assert!((val - f(x)).abs() < 1e-12, "{tag:?}");
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let m = gen_structured_tri(3, 2, Rect { x0: -1.0, x1: 2.0, y0: 0.0, y1: 1.5 }).unwrap();
        reproduce(&m, SpaceTag::P1, |x| 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        reproduce(&m, SpaceTag::P1b, |x| 0.5 - x[0] + 4.0 * x[1]);
        reproduce(&m, SpaceTag::P2, |x| 1.0 + x[0] * x[1] - 2.0 * x[0] * x[0] + x[1] * x[1]);
        let q = gen_quad_macro([0.5, 1.0], [2.0, 0.25]).unwrap();
        reproduce(&q, SpaceTag::Q1, |x| 1.0 + x[0] - x[1] + 3.0 * x[0] * x[1]);
        reproduce(&q, SpaceTag::Q2, |x| x[0] * x[0] * x[1] * x[1] - x[0] * x[1] * x[1] + 2.0);
        let t = gen_kuhn_cube(2).unwrap();
        reproduce(&t, SpaceTag::P1, |x| 1.0 + x[0] - 2.0 * x[1] + 3.0 * x[2]);
        reproduce(&t, SpaceTag::P1b, |x| x[2] - x[0]);
    }
}
