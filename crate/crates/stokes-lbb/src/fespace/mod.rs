//! Local bases, quadrature rules and global degree-of-freedom numbering.

mod basis;
mod dofmap;
mod quadrature;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use basis::{eval_basis, local_dim, local_nodes, BasisValues};
pub use dofmap::{build_dofmap, evaluate, interpolate, DofMap};
pub use quadrature::{gauss_legendre_unit, quadrature, QuadratureRule};

use crate::error::{FeError, MeshError};
use crate::mesh::{CellKind, Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceTag {
    P0,
    P1,
    P1b,
    P2,
    Q1,
    Q2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    C0,
    Discontinuous,
}

impl SpaceTag {
    pub fn continuity(self) -> Continuity {
        match self {
            SpaceTag::P0 => Continuity::Discontinuous,
            _ => Continuity::C0,
        }
    }

    /// Highest total polynomial degree (tensor degree for Q spaces).
    pub fn degree(self) -> usize {
        match self {
            SpaceTag::P0 => 0,
            SpaceTag::P1 | SpaceTag::Q1 => 1,
            SpaceTag::P2 | SpaceTag::Q2 => 2,
            SpaceTag::P1b => 3,
        }
    }

    pub fn supports(self, kind: CellKind) -> bool {
        local_dim(self, kind).is_ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceTag::P0 => "p0",
            SpaceTag::P1 => "p1",
            SpaceTag::P1b => "p1b",
            SpaceTag::P2 => "p2",
            SpaceTag::Q1 => "q1",
            SpaceTag::Q2 => "q2",
        }
    }
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceTag {
    type Err = FeError;

    fn from_str(s: &str) -> Result<Self, FeError> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "p0" => SpaceTag::P0,
            "p1" => SpaceTag::P1,
            "p1b" => SpaceTag::P1b,
            "p2" => SpaceTag::P2,
            "q1" => SpaceTag::Q1,
            "q2" => SpaceTag::Q2,
            _ => return Err(FeError::UnsupportedCombo("unknown space name")),
        })
    }
}

/// One velocity space per component plus a pressure space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FECombo {
    pub velocity_spaces: Vec<SpaceTag>,
    pub pressure_space: SpaceTag,
}

impl FECombo {
    pub fn new(velocity_spaces: &[SpaceTag], pressure_space: SpaceTag) -> Self {
        FECombo { velocity_spaces: velocity_spaces.to_vec(), pressure_space }
    }

    pub fn dim(&self) -> usize {
        self.velocity_spaces.len()
    }

    /// Checks that every space lives on `kind` and the component count matches.
    pub fn check(&self, kind: CellKind) -> Result<(), FeError> {
        if self.dim() != kind.dim() {
            return Err(FeError::UnsupportedCombo("component count differs from mesh dimension"));
        }
        if self.pressure_space.continuity() != Continuity::C0 {
            return Err(FeError::UnsupportedCombo("pressure space must be continuous"));
        }
        for &t in self.velocity_spaces.iter().chain([&self.pressure_space]) {
            if !t.supports(kind) || t == SpaceTag::P0 {
                return Err(FeError::Incompatible(t, kind));
            }
        }
        Ok(())
    }

    /// True when every component carries a bubble.
    pub fn all_bubbles(&self) -> bool {
        self.velocity_spaces.iter().all(|&t| t == SpaceTag::P1b)
    }
}

impl fmt::Display for FECombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<&str> = self.velocity_spaces.iter().map(|t| t.name()).collect();
        write!(f, "{}:{}", v.join("-"), self.pressure_space)
    }
}

/// Parses `"p1b-p1:p1"` (velocity components, colon, pressure).
impl FromStr for FECombo {
    type Err = FeError;

    fn from_str(s: &str) -> Result<Self, FeError> {
        let (vel, pre) = s
            .split_once(':')
            .ok_or(FeError::UnsupportedCombo("expected <u>-<v>[-<w>]:<p>"))?;
        let velocity_spaces = vel
            .split('-')
            .map(SpaceTag::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        if !(2..=3).contains(&velocity_spaces.len()) {
            return Err(FeError::UnsupportedCombo("need two or three velocity components"));
        }
        Ok(FECombo { velocity_spaces, pressure_space: pre.parse()? })
    }
}

/// Affine reference-to-physical map `x = x0 + J xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub origin: Point,
    pub jac: [[f64; 3]; 3],
    /// Inverse transpose, maps reference gradients to physical ones.
    pub inv_t: [[f64; 3]; 3],
    pub det: f64,
    pub dim: usize,
}

impl AffineMap {
    pub fn for_cell(mesh: &Mesh, c: usize) -> Result<AffineMap, MeshError> {
        let p = mesh.cell_points(c);
        let dim = mesh.dim();
        let cols: Vec<Point> = match mesh.kind() {
            CellKind::Triangle => alloc::vec![sub(p[1], p[0]), sub(p[2], p[0])],
            CellKind::Tetrahedron => alloc::vec![sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0])],
            CellKind::Quadrilateral => {
                let a = sub(p[1], p[0]);
                let b = sub(p[3], p[0]);
                let d = sub(p[2], p[0]);
                let scale = a[0].abs() + a[1].abs() + b[0].abs() + b[1].abs();
                if (d[0] - a[0] - b[0]).abs() + (d[1] - a[1] - b[1]).abs() > 1e-10 * scale {
                    return Err(MeshError::Unsupported("quadrilateral is not a parallelogram"));
                }
                alloc::vec![a, b]
            }
        };
        let mut jac = [[0.0; 3]; 3];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..3 {
                jac[i][j] = col[i];
            }
        }
        if dim == 2 {
            jac[2][2] = 1.0;
        }
        let det = det3(&jac);
        if det.abs() == 0.0 || !det.is_finite() {
            return Err(MeshError::Degenerate(c));
        }
        let inv = inv3(&jac, det);
        let mut inv_t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv_t[i][j] = inv[j][i];
            }
        }
        Ok(AffineMap { origin: p[0], jac, inv_t, det, dim })
    }

    pub fn map(&self, xi: [f64; 3]) -> Point {
        let mut x = self.origin;
        for i in 0..self.dim {
            for j in 0..self.dim {
                x[i] += self.jac[i][j] * xi[j];
            }
        }
        x
    }

    /// Reference coordinates of a physical point.
    pub fn pullback(&self, x: Point) -> [f64; 3] {
        let d = sub(x, self.origin);
        let mut xi = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                xi[i] += self.inv_t[j][i] * d[j];
            }
        }
        xi
    }

    pub fn grad(&self, g: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.inv_t[i][j] * g[j];
            }
        }
        out
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    r
}

/// Short label such as `P1bP1P1`.
pub fn combo_label(combo: &FECombo) -> String {
    let mut s = String::new();
    for t in combo.velocity_spaces.iter().chain([&combo.pressure_space]) {
        let n = t.name();
        s.push_str(&n[..1].to_ascii_uppercase());
        s.push_str(&n[1..]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::mesh::{gen_kuhn_cube, gen_quad_macro, gen_structured_tri, Rect};

    #[test]
    fn parse_and_display_combo() {
        let c: FECombo = "p1b-p1:p1".parse().unwrap();
        assert_eq!(c.velocity_spaces, [SpaceTag::P1b, SpaceTag::P1]);
        assert_eq!(c.pressure_space, SpaceTag::P1);
        assert_eq!(c.to_string(), "p1b-p1:p1");
        assert_eq!(combo_label(&c), "P1bP1P1");
        assert!("p1b-p1".parse::<FECombo>().is_err());
        assert!("p3-p1:p1".parse::<FECombo>().is_err());
        assert!(c.check(CellKind::Triangle).is_ok());
        assert!(c.check(CellKind::Tetrahedron).is_err());
        assert!("p1-p1:p0".parse::<FECombo>().unwrap().check(CellKind::Triangle).is_err());
    }

    #[test]
    fn continuity() {
        assert_eq!(SpaceTag::P0.continuity(), Continuity::Discontinuous);
        for t in [SpaceTag::P1, SpaceTag::P1b, SpaceTag::P2, SpaceTag::Q1, SpaceTag::Q2] {
            assert_eq!(t.continuity(), Continuity::C0);
        }
    }

    #[test]
    fn affine_maps_roundtrip() {
        let meshes = [
            gen_structured_tri(2, 3, Rect::UNIT).unwrap(),
            gen_kuhn_cube(1).unwrap(),
            gen_quad_macro([0.5, 1.0], [2.0, 0.25]).unwrap(),
        ];
        for m in &meshes {
            let mut total = 0.0;
            for c in 0..m.num_cells() {
                let a = AffineMap::for_cell(m, c).unwrap();
                assert!(a.det > 0.0);
                let fact = if m.kind() == CellKind::Tetrahedron { 6.0 } else if m.kind() == CellKind::Triangle { 2.0 } else { 1.0 };
                assert!((a.det / fact - m.cell_measure(c)).abs() < 1e-14);
                total += m.cell_measure(c);
                let x = m.cell_centroid(c);
                let back = a.map(a.pullback(x));
                for k in 0..3 {
                    assert!((back[k] - x[k]).abs() < 1e-14);
                }
            }
            assert!(total > 0.0);
        }
    }
}
