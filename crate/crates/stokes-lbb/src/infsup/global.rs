use alloc::vec::Vec;

use crate::error::{MacroError, MeshError};
use crate::fespace::FECombo;
use crate::macroelement::{family_2d, Family2d};
use crate::mesh::{CellKind, Mesh};

/// Level index of every vertex along `axis` for a mesh made of uniform
/// layers, together with the layer thickness.
fn layer_levels(mesh: &Mesh, axis: usize) -> Result<(Vec<usize>, f64), MacroError> {
    let coords: Vec<f64> = mesh.vertices().iter().map(|p| p[axis]).collect();
    let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (hi - lo);
    let mut levels: Vec<f64> = coords.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| *a - *b <= tol);
    let not_layered = MacroError::Mesh(MeshError::Unsupported("mesh is not made of uniform layers"));
    if levels.len() < 2 {
        return Err(not_layered);
    }
    let h = (hi - lo) / (levels.len() - 1) as f64;
    let index: Vec<usize> = coords.iter().map(|&y| libm::round((y - lo) / h) as usize).collect();
    for (&y, &j) in coords.iter().zip(&index) {
        if libm::fabs(lo + j as f64 * h - y) > tol {
            return Err(not_layered);
        }
    }
    for c in 0..mesh.num_cells() {
        let js: Vec<usize> = mesh.cell(c).iter().map(|&v| index[v]).collect();
        let (a, b) = (js.iter().min().unwrap(), js.iter().max().unwrap());
        if b - a != 1 {
            return Err(not_layered);
        }
    }
    Ok((index, h))
}

/// Layered zig-zag pressure `(-1)^i (y - r_i)` on layer `i`, with `r_i` the
/// mid-height of the layer; layers run along y for `p1b-p1` and `p2-p1`,
/// along x for the swapped combinations. Values are given per vertex.
pub fn global_counterexample(mesh: &Mesh, combo: &FECombo) -> Result<Vec<f64>, MacroError> {
    if mesh.kind() != CellKind::Triangle {
        return Err(MacroError::WrongDimension(2));
    }
    let axis = match family_2d(combo)? {
        Family2d::Bubble { swap } | Family2d::Quadratic { swap } => {
            if swap {
                0
            } else {
                1
            }
        }
    };
    let (index, h) = layer_levels(mesh, axis)?;
    // at level j the profile equals (-1)^j h / 2 from either adjacent layer
    Ok(index.iter().map(|&j| if j % 2 == 0 { 0.5 * h } else { -0.5 * h }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, spectral_norm};
    use crate::mesh::{gen_perturbed, gen_structured_tri, Rect};
    use crate::stokes::assemble;
    use core::str::FromStr;

    #[test]
    fn figure_mesh_values() {
        let mesh = gen_structured_tri(4, 3, Rect::UNIT).unwrap();
        let p = global_counterexample(&mesh, &FECombo::from_str("p1b-p1:p1").unwrap()).unwrap();
        for (v, x) in mesh.vertices().iter().enumerate() {
            // layer 1 holds -(y - 1/6), layer 2 holds (y - 1/2), layer 3 holds -(y - 5/6)
            let y = x[1];
            let expected = if y <= 1.0 / 3.0 + 1e-12 {
                -(y - 1.0 / 6.0)
            } else if y <= 2.0 / 3.0 + 1e-12 {
                y - 0.5
            } else {
                -(y - 5.0 / 6.0)
            };
            assert!((p[v] - expected).abs() < 1e-14, "vertex {v}");
        }
    }

    #[test]
    fn counterexample_is_divergence_free() {
        for (nx, ny) in [(4, 3), (7, 5), (12, 12)] {
            let mesh = gen_structured_tri(nx, ny, Rect::UNIT).unwrap();
            for s in ["p1b-p1:p1", "p1-p1b:p1", "p2-p1:p1"] {
                let c = FECombo::from_str(s).unwrap();
                let p = global_counterexample(&mesh, &c).unwrap();
                let sys = assemble(&mesh, &c).unwrap();
                let b = sys.b_interior();
                let r = norm(&b.tr_mul_vec(&p));
                assert!(r <= 1e-11 * spectral_norm(&b, 500) * norm(&p), "{s} {nx}x{ny}");
                let mp = sys.mp.mul_vec(&p);
                assert!(mp.iter().sum::<f64>().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn perturbed_mesh_loses_vertical_layers() {
        let base = gen_structured_tri(6, 6, Rect::UNIT).unwrap();
        let mesh = gen_perturbed(&base, 0.05, 7).unwrap();
        assert!(global_counterexample(&mesh, &FECombo::from_str("p1b-p1:p1").unwrap()).is_ok());
        assert!(global_counterexample(&mesh, &FECombo::from_str("p1-p1b:p1").unwrap()).is_err());
    }
}
