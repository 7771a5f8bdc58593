//! Splitting planes and vertical semi-planes of tetrahedral stars.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{MacroElement, RegularityVerdict, StructureFlags, VerdictReason};
use crate::error::MacroError;
use crate::fespace::{FECombo, SpaceTag};
use crate::mesh::{CellKind, Mesh};

/// Faces through the center, keyed by their two other vertices, with the
/// positions (in `m.cells`) of the two tetrahedra sharing each.
fn center_faces(mesh: &Mesh, m: &MacroElement) -> BTreeMap<[usize; 2], Vec<usize>> {
    let mut faces: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    for (k, &c) in m.cells.iter().enumerate() {
        let others: Vec<usize> = mesh.cell(c).iter().copied().filter(|&v| v != m.center).collect();
        for skip in 0..3 {
            let mut f = [0usize; 2];
            let mut n = 0;
            for (i, &v) in others.iter().enumerate() {
                if i != skip {
                    f[n] = v;
                    n += 1;
                }
            }
            f.sort_unstable();
            faces.entry(f).or_default().push(k);
        }
    }
    faces
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count(&mut self) -> usize {
        (0..self.0.len()).filter(|&i| self.find(i) == i).count()
    }
}

fn check_3d(mesh: &Mesh) -> Result<(), MacroError> {
    if mesh.kind() != CellKind::Tetrahedron {
        return Err(MacroError::WrongDimension(3));
    }
    Ok(())
}

/// True when the faces lying in the plane `x_axis = q0_axis` disconnect the star.
pub fn planar_split(mesh: &Mesh, m: &MacroElement, axis: usize, tol: f64) -> bool {
    let q0 = mesh.vertex(m.center);
    let t = tol * m.diameter(mesh);
    let mut dsu = Dsu::new(m.cells.len());
    for (f, ks) in center_faces(mesh, m) {
        let in_plane = f.iter().all(|&v| libm::fabs(mesh.vertex(v)[axis] - q0[axis]) <= t);
        if !in_plane && ks.len() == 2 {
            dsu.union(ks[0], ks[1]);
        }
    }
    dsu.count() > 1
}

/// Semi-planes bounded by the line through the center parallel to an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiPlanes {
    /// Distinct directions of faces separating different regions.
    pub count: usize,
    /// Exactly two semi-planes forming one plane.
    pub aligned: bool,
    /// Angles of those semi-planes in the plane orthogonal to the axis.
    pub directions: Vec<f64>,
    /// Connected parts of the star once every face parallel to the axis is removed.
    pub regions: usize,
}

/// Faces through the center parallel to `axis` are removed; the remaining
/// adjacency splits the star into regions, and every direction carrying a
/// face between two different regions is one splitting semi-plane.
pub fn semi_planes(mesh: &Mesh, m: &MacroElement, axis: usize, tol: f64) -> SemiPlanes {
    let (ia, ib) = ((axis + 1) % 3, (axis + 2) % 3);
    let q0 = mesh.vertex(m.center);
    let h = m.diameter(mesh);
    let proj = |v: usize| {
        let p = mesh.vertex(v);
        [p[ia] - q0[ia], p[ib] - q0[ib]]
    };
    let faces = center_faces(mesh, m);
    let mut dsu = Dsu::new(m.cells.len());
    let mut vertical = Vec::new();
    for (f, ks) in &faces {
        let (a, b) = (proj(f[0]), proj(f[1]));
        let det = a[0] * b[1] - a[1] * b[0];
        if libm::fabs(det) <= tol * h * h {
            vertical.push((*f, ks.clone()));
        } else if ks.len() == 2 {
            dsu.union(ks[0], ks[1]);
        }
    }
    let regions = dsu.count();
    let mut dirs = Vec::new();
    for (f, ks) in &vertical {
        if ks.len() != 2 || dsu.find(ks[0]) == dsu.find(ks[1]) {
            continue;
        }
        for &v in f {
            let p = proj(v);
            if libm::hypot(p[0], p[1]) > tol * h {
                let mut a = libm::atan2(p[1], p[0]);
                if a < 0.0 {
                    a += 2.0 * PI;
                }
                dirs.push(a);
            }
        }
    }
    dirs.sort_by(f64::total_cmp);
    let atol = tol.max(1e-12);
    let mut directions: Vec<f64> = Vec::new();
    for a in dirs {
        match directions.last() {
            Some(&l) if a - l <= atol => {}
            _ => directions.push(a),
        }
    }
    if directions.len() > 1 && directions[0] + 2.0 * PI - directions[directions.len() - 1] <= atol {
        directions.pop();
    }
    let aligned = directions.len() == 2 && libm::fabs(directions[1] - directions[0] - PI) <= atol;
    SemiPlanes { count: directions.len(), aligned, directions, regions }
}

pub fn classify_3d(mesh: &Mesh, m: &MacroElement, alignment_tol: f64) -> StructureFlags {
    let sp = semi_planes(mesh, m, 2, alignment_tol);
    StructureFlags {
        x_structured: planar_split(mesh, m, 0, alignment_tol),
        y_structured: planar_split(mesh, m, 1, alignment_tol),
        z_structured: planar_split(mesh, m, 2, alignment_tol),
        min_sin: 0.0,
        min_cos: 0.0,
        aligned_count_y: 0,
        aligned_count_x: 0,
        semi_plane_count: sp.count,
        semi_planes_aligned: sp.aligned,
    }
}

/// Closed-form regularity of a tetrahedral star.
///
/// With two enriched components the star is singular exactly when a plane
/// orthogonal to the remaining axis splits it. With one enriched component
/// the semi-planes parallel to that axis decide.
pub fn predict_regularity_3d(
    mesh: &Mesh,
    m: &MacroElement,
    combo: &FECombo,
    alignment_tol: f64,
) -> Result<RegularityVerdict, MacroError> {
    check_3d(mesh)?;
    if combo.pressure_space != SpaceTag::P1 || combo.dim() != 3 {
        return Err(MacroError::UnsupportedCombo("expected three velocity components and P1 pressure"));
    }
    let vs = &combo.velocity_spaces;
    if vs.iter().any(|&t| t != SpaceTag::P1 && t != SpaceTag::P1b) {
        return Err(MacroError::UnsupportedCombo("velocity components must be p1 or p1b"));
    }
    let plain: Vec<usize> = (0..3).filter(|&k| vs[k] == SpaceTag::P1).collect();
    match plain.len() {
        1 => {
            let split = planar_split(mesh, m, plain[0], alignment_tol);
            let reason = if split { VerdictReason::PlaneSplit3d } else { VerdictReason::PlaneUnsplit3d };
            Ok(RegularityVerdict::new(!split, reason))
        }
        2 => {
            let axis = (0..3).find(|k| !plain.contains(k)).unwrap_or(2);
            let sp = semi_planes(mesh, m, axis, alignment_tol);
            Ok(if sp.regions == 1 || sp.count < 2 {
                RegularityVerdict::new(true, VerdictReason::SemiPlaneCase1)
            } else if sp.count == 2 && !sp.aligned {
                RegularityVerdict::new(true, VerdictReason::SemiPlaneCase2)
            } else if sp.count == 2 {
                RegularityVerdict::new(false, VerdictReason::SemiPlaneCase2Aligned)
            } else {
                RegularityVerdict::new(false, VerdictReason::SemiPlaneCase3)
            })
        }
        _ => Err(MacroError::UnsupportedCombo("expected one or two enriched components")),
    }
}
