use alloc::vec;
use alloc::vec::Vec;

use super::SpaceTag;
use crate::error::FeError;
use crate::mesh::CellKind;

/// Shape function values and reference-coordinate gradients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 3]>,
}

/// Number of local shape functions of `tag` on `kind`.
pub fn local_dim(tag: SpaceTag, kind: CellKind) -> Result<usize, FeError> {
    use CellKind::*;
    use SpaceTag::*;
    Ok(match (tag, kind) {
        (P0, _) => 1,
        (P1, Triangle) => 3,
        (P1b, Triangle) => 4,
        (P2, Triangle) => 6,
        (P1, Tetrahedron) => 4,
        (P1b, Tetrahedron) => 5,
        (Q1, Quadrilateral) => 4,
        (Q2, Quadrilateral) => 9,
        _ => return Err(FeError::Incompatible(tag, kind)),
    })
}

fn barycentric(kind: CellKind, p: &[f64]) -> (Vec<f64>, Vec<[f64; 3]>) {
    match kind {
        CellKind::Triangle => (
            vec![1.0 - p[0] - p[1], p[0], p[1]],
            vec![[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        ),
        _ => (
            vec![1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]],
            vec![
                [-1.0, -1.0, -1.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
        ),
    }
}

fn axpy(acc: &mut [f64; 3], a: f64, x: [f64; 3]) {
    for k in 0..3 {
        acc[k] += a * x[k];
    }
}

fn inside(kind: CellKind, p: &[f64]) -> bool {
    let tol = 1e-9;
    match kind {
        CellKind::Triangle => p[0] >= -tol && p[1] >= -tol && p[0] + p[1] <= 1.0 + tol,
        CellKind::Tetrahedron => {
            p[0] >= -tol && p[1] >= -tol && p[2] >= -tol && p[0] + p[1] + p[2] <= 1.0 + tol
        }
        CellKind::Quadrilateral => p[..2].iter().all(|&t| (-tol..=1.0 + tol).contains(&t)),
    }
}

/// Evaluate every local shape function of `tag` at reference point `point`.
///
/// Reference cells: the unit simplex, and `[0,1]^2` with corners ordered
/// counter-clockwise from the origin. Simplex local order is vertices, then
/// edges in [`CellKind::local_edges`] order, then the bubble. Q2 orders
/// corners, edge midpoints, center.
pub fn eval_basis(tag: SpaceTag, kind: CellKind, point: &[f64]) -> Result<BasisValues, FeError> {
    let n = local_dim(tag, kind)?;
    let mut p = [0.0; 3];
    p[..point.len().min(3)].copy_from_slice(&point[..point.len().min(3)]);
    if !inside(kind, &p) {
        return Err(FeError::OutsideReference);
    }
    let mut values = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    match (tag, kind) {
        (SpaceTag::P0, _) => {
            values.push(1.0);
            grads.push([0.0; 3]);
        }
        (SpaceTag::Q1, _) | (SpaceTag::Q2, _) => {
            let order = if tag == SpaceTag::Q1 { 1 } else { 2 };
            let (lx, dx) = lagrange_1d(order, p[0]);
            let (ly, dy) = lagrange_1d(order, p[1]);
            for &(i, j) in tensor_nodes(order) {
                values.push(lx[i] * ly[j]);
                grads.push([dx[i] * ly[j], lx[i] * dy[j], 0.0]);
            }
        }
        _ => {
            let (l, dl) = barycentric(kind, &p);
            if tag == SpaceTag::P2 {
                for i in 0..l.len() {
                    values.push(l[i] * (2.0 * l[i] - 1.0));
                    let mut g = [0.0; 3];
                    axpy(&mut g, 4.0 * l[i] - 1.0, dl[i]);
                    grads.push(g);
                }
                for &[a, b] in kind.local_edges() {
                    values.push(4.0 * l[a] * l[b]);
                    let mut g = [0.0; 3];
                    axpy(&mut g, 4.0 * l[b], dl[a]);
                    axpy(&mut g, 4.0 * l[a], dl[b]);
                    grads.push(g);
                }
            } else {
                values.extend_from_slice(&l);
                grads.extend_from_slice(&dl);
            }
            if tag == SpaceTag::P1b {
                let scale = if kind == CellKind::Triangle { 27.0 } else { 256.0 };
                let prod: f64 = l.iter().product();
                values.push(scale * prod);
                let mut g = [0.0; 3];
                for i in 0..l.len() {
                    let others: f64 = (0..l.len()).filter(|&j| j != i).map(|j| l[j]).product();
                    axpy(&mut g, scale * others, dl[i]);
                }
                grads.push(g);
            }
        }
    }
    Ok(BasisValues { values, grads })
}

/// 1D Lagrange values and derivatives on [0,1] with equispaced nodes.
fn lagrange_1d(order: usize, t: f64) -> ([f64; 3], [f64; 3]) {
    if order == 1 {
        ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0])
    } else {
        // nodes 0, 1/2, 1
        (
            [(2.0 * t - 1.0) * (t - 1.0), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)],
            [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
        )
    }
}

/// Node index pairs of the tensor basis in local dof order.
fn tensor_nodes(order: usize) -> &'static [(usize, usize)] {
    if order == 1 {
        &[(0, 0), (1, 0), (1, 1), (0, 1)]
    } else {
        &[
            (0, 0),
            (2, 0),
            (2, 2),
            (0, 2),
            (1, 0),
            (2, 1),
            (1, 2),
            (0, 1),
            (1, 1),
        ]
    }
}

/// Reference coordinates of each local nodal point.
pub fn local_nodes(tag: SpaceTag, kind: CellKind) -> Result<Vec<[f64; 3]>, FeError> {
    local_dim(tag, kind)?;
    let verts: &[[f64; 3]] = match kind {
        CellKind::Triangle => &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        CellKind::Tetrahedron => &[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ],
        CellKind::Quadrilateral => &[
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ],
    };
    let nv = verts.len() as f64;
    let center = [0, 1, 2].map(|k| verts.iter().map(|v| v[k]).sum::<f64>() / nv);
    let mid = |[a, b]: [usize; 2]| [0, 1, 2].map(|k| 0.5 * (verts[a][k] + verts[b][k]));
    Ok(match tag {
        SpaceTag::P0 => vec![center],
        SpaceTag::P1 | SpaceTag::Q1 => verts.to_vec(),
        SpaceTag::P1b => {
            let mut n = verts.to_vec();
            n.push(center);
            n
        }
        SpaceTag::P2 => {
            let mut n = verts.to_vec();
            n.extend(kind.local_edges().iter().map(|&e| mid(e)));
            n
        }
        SpaceTag::Q2 => {
            let mut n = verts.to_vec();
            n.extend(kind.local_edges().iter().map(|&e| mid(e)));
            n.push(center);
            n
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PAIRS: [(SpaceTag, CellKind); 8] = [
        (SpaceTag::P0, CellKind::Triangle),
        (SpaceTag::P1, CellKind::Triangle),
        (SpaceTag::P1b, CellKind::Triangle),
        (SpaceTag::P2, CellKind::Triangle),
        (SpaceTag::P1, CellKind::Tetrahedron),
        (SpaceTag::P1b, CellKind::Tetrahedron),
        (SpaceTag::Q1, CellKind::Quadrilateral),
        (SpaceTag::Q2, CellKind::Quadrilateral),
    ];

    fn random_interior(kind: CellKind, rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let p = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
            let ok = match kind {
                CellKind::Triangle => p[0] + p[1] < 0.95,
                CellKind::Tetrahedron => p[0] + p[1] + p[2] < 0.95,
                CellKind::Quadrilateral => true,
            };
            if ok {
                return p;
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for (tag, kind) in PAIRS {
            for _ in 0..10 {
                let p = random_interior(kind, &mut rng);
                let b = eval_basis(tag, kind, &p).unwrap();
                for d in 0..kind.dim() {
                    let mut pp = p;
                    let mut pm = p;
                    pp[d] += h;
                    pm[d] -= h;
                    let vp = eval_basis(tag, kind, &pp).unwrap().values;
                    let vm = eval_basis(tag, kind, &pm).unwrap().values;
                    for i in 0..vp.len() {
                        let fd = (vp[i] - vm[i]) / (2.0 * h);
                        assert!((fd - b.grads[i][d]).abs() < 1e-6, "{tag:?} {kind:?} fn {i} dir {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (tag, kind) in PAIRS {
            let p = random_interior(kind, &mut rng);
            let v = eval_basis(tag, kind, &p).unwrap().values;
            let n = if tag == SpaceTag::P1b { v.len() - 1 } else { v.len() };
            let s: f64 = v[..n].iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "{tag:?} {kind:?}");
        }
    }

    #[test]
    fn lagrange_property_at_nodes() {
        for (tag, kind) in PAIRS {
            if tag == SpaceTag::P1b {
                continue;
            }
            let nodes = local_nodes(tag, kind).unwrap();
            for (i, x) in nodes.iter().enumerate() {
                let v = eval_basis(tag, kind, x).unwrap().values;
                for (j, vj) in v.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - e).abs() < 1e-14, "{tag:?} {kind:?} node {i} fn {j}");
                }
            }
        }
    }

    #[test]
    fn bubble_is_one_at_barycenter_and_zero_on_boundary() {
        let b = eval_basis(SpaceTag::P1b, CellKind::Triangle, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((b.values[3] - 1.0).abs() < 1e-14);
        let b = eval_basis(SpaceTag::P1b, CellKind::Tetrahedron, &[0.25, 0.25, 0.25]).unwrap();
        assert!((b.values[4] - 1.0).abs() < 1e-14);
        let b = eval_basis(SpaceTag::P1b, CellKind::Triangle, &[0.3, 0.7]).unwrap();
        assert!(b.values[3].abs() < 1e-14);
        // vertex functions alone still sum to one
        let s: f64 = b.values[..3].iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_pairs() {
        assert!(eval_basis(SpaceTag::P2, CellKind::Tetrahedron, &[0.1, 0.1, 0.1]).is_err());
        assert!(eval_basis(SpaceTag::Q1, CellKind::Triangle, &[0.1, 0.1]).is_err());
        assert!(eval_basis(SpaceTag::P1, CellKind::Quadrilateral, &[0.1, 0.1]).is_err());
        assert_eq!(
            eval_basis(SpaceTag::P1, CellKind::Triangle, &[0.8, 0.8]),
            Err(FeError::OutsideReference)
        );
    }
}
