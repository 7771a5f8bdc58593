//! Vertex-centered macro-elements, their geometric structure and the
//! closed-form regularity predicates for partially enriched elements.

mod space3d;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use space3d::{classify_3d, planar_split, predict_regularity_3d, semi_planes, SemiPlanes};

use crate::error::{MacroError, MeshError};
use crate::fespace::{FECombo, SpaceTag};
use crate::mesh::{dist, CellKind, Mesh, Point};

/// Star of one interior vertex.
///
/// In 2D the ring is counterclockwise, starting at the smallest angle, and
/// `cells[i]` lies between `ring_vertices[i]` and `ring_vertices[i + 1]`.
/// In 3D the ring and the cells are sorted by index and `angles` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroElement {
    pub center: usize,
    pub ring_vertices: Vec<usize>,
    pub cells: Vec<usize>,
    /// Angle in `[0, 2pi)` from the positive x axis to the edge `q0 qi`.
    pub angles: Vec<f64>,
    /// Cell measures, in the order of `cells`.
    pub areas: Vec<f64>,
}

impl MacroElement {
    pub fn n_v(&self) -> usize {
        self.ring_vertices.len()
    }

    pub fn measure(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Center, ring, then every other vertex of the star in ascending order.
    pub fn local_vertices(&self, mesh: &Mesh) -> Vec<usize> {
        let mut out = vec![self.center];
        out.extend_from_slice(&self.ring_vertices);
        let mut rest: Vec<usize> = self
            .cells
            .iter()
            .flat_map(|&c| mesh.cell(c).iter().copied())
            .filter(|v| !out.contains(v))
            .collect();
        rest.sort_unstable();
        rest.dedup();
        out.extend(rest);
        out
    }

    /// Largest distance between two vertices of the star.
    pub fn diameter(&self, mesh: &Mesh) -> f64 {
        let pts: Vec<Point> = self.local_vertices(mesh).iter().map(|&v| mesh.vertex(v)).collect();
        let mut h: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                h = h.max(dist(pts[i], pts[j]));
            }
        }
        h
    }

    /// The star as a stand-alone mesh; vertex `i` of the result is
    /// `local_vertices(mesh)[i]`, so the center is vertex 0.
    pub fn submesh(&self, mesh: &Mesh) -> Result<Mesh, MeshError> {
        let verts = self.local_vertices(mesh);
        let mut local = BTreeMap::new();
        for (i, &v) in verts.iter().enumerate() {
            local.insert(v, i);
        }
        let cells = self.cells.iter().map(|&c| mesh.cell(c).iter().map(|v| local[v]).collect()).collect();
        Mesh::new(mesh.kind(), verts.iter().map(|&v| mesh.vertex(v)).collect(), cells, vec![])
    }
}

/// Result of covering a mesh by vertex-centered macro-elements.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroCover {
    pub macros: Vec<MacroElement>,
    /// Cells without an interior vertex.
    pub uncovered_cells: Vec<usize>,
    pub warnings: Vec<String>,
}

impl MacroCover {
    pub fn coverable(&self) -> bool {
        !self.macros.is_empty() && self.uncovered_cells.is_empty()
    }
}

fn angle_of(c: Point, p: Point) -> f64 {
    let a = libm::atan2(p[1] - c[1], p[0] - c[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// One macro-element per interior vertex, in ascending vertex order.
pub fn build_macroelements(mesh: &Mesh) -> MacroCover {
    let boundary = mesh.boundary_vertex_mask();
    let vcells = mesh.vertex_cells();
    let neighbors = mesh.vertex_neighbors();
    let mut macros = Vec::new();
    let mut warnings = Vec::new();
    for v in 0..mesh.num_vertices() {
        if boundary[v] || vcells[v].is_empty() {
            continue;
        }
        let built = if mesh.dim() == 2 {
            star_2d(mesh, v, &vcells[v])
        } else {
            Some(MacroElement {
                center: v,
                ring_vertices: neighbors[v].clone(),
                cells: vcells[v].clone(),
                angles: Vec::new(),
                areas: vcells[v].iter().map(|&c| mesh.cell_measure(c)).collect(),
            })
        };
        match built {
            Some(m) => macros.push(m),
            None => warnings.push(format!("vertex {v}: star is not a simple cycle, skipped")),
        }
    }
    let uncovered_cells: Vec<usize> = (0..mesh.num_cells())
        .filter(|&c| mesh.cell(c).iter().all(|&v| boundary[v]))
        .collect();
    if macros.is_empty() {
        warnings.push(String::from("mesh has no interior vertex; no macro-element cover exists"));
    }
    if !uncovered_cells.is_empty() {
        warnings.push(format!(
            "{} cell(s) have no interior vertex (first: {}); the mesh cannot be covered by vertex-centered macro-elements",
            uncovered_cells.len(),
            uncovered_cells[0]
        ));
    }
    MacroCover { macros, uncovered_cells, warnings }
}

fn star_2d(mesh: &Mesh, v: usize, cells: &[usize]) -> Option<MacroElement> {
    let nv = mesh.kind().vertex_count();
    // counterclockwise successor of each ring vertex, with the cell between them
    let mut succ: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &c in cells {
        let cell = mesh.cell(c);
        let j = cell.iter().position(|&w| w == v)?;
        let a = cell[(j + 1) % nv];
        let b = cell[(j + nv - 1) % nv];
        if succ.insert(a, (b, c)).is_some() {
            return None;
        }
    }
    let q0 = mesh.vertex(v);
    let start = *succ
        .keys()
        .min_by(|&&a, &&b| angle_of(q0, mesh.vertex(a)).total_cmp(&angle_of(q0, mesh.vertex(b))).then(a.cmp(&b)))?;
    let mut ring = Vec::with_capacity(succ.len());
    let mut star = Vec::with_capacity(succ.len());
    let mut cur = start;
    for _ in 0..succ.len() {
        let (next, c) = *succ.get(&cur)?;
        ring.push(cur);
        star.push(c);
        cur = next;
    }
    if cur != start {
        return None;
    }
    let angles = ring.iter().map(|&w| angle_of(q0, mesh.vertex(w))).collect();
    let areas = star.iter().map(|&c| mesh.cell_measure(c)).collect();
    Some(MacroElement { center: v, ring_vertices: ring, cells: star, angles, areas })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructureFlags {
    pub x_structured: bool,
    pub y_structured: bool,
    pub z_structured: bool,
    /// Smallest `|sin(sigma_i)|` once the single smallest is discarded (2D only).
    pub min_sin: f64,
    /// Same with `|cos(sigma_i)|` (2D only).
    pub min_cos: f64,
    /// Ring vertices at the height of the center.
    pub aligned_count_y: usize,
    /// Ring vertices with the abscissa of the center.
    pub aligned_count_x: usize,
    /// Vertical semi-planes through the center splitting the star (3D).
    pub semi_plane_count: usize,
    pub semi_planes_aligned: bool,
}

/// Default relative tolerance for alignment tests.
pub const ALIGNMENT_TOL: f64 = 1e-9;
/// Default relative threshold on `|S|`.
pub const S_TOL: f64 = 1e-10;

fn second_smallest(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => 0.0,
        1 => v[0],
        _ => v[1],
    }
}

pub fn classify_2d(mesh: &Mesh, m: &MacroElement, alignment_tol: f64) -> StructureFlags {
    let q0 = mesh.vertex(m.center);
    let tol = alignment_tol * m.diameter(mesh);
    let count = |axis: usize| {
        m.ring_vertices.iter().filter(|&&w| libm::fabs(mesh.vertex(w)[axis] - q0[axis]) <= tol).count()
    };
    let (ax, ay) = (count(0), count(1));
    StructureFlags {
        x_structured: ax >= 2,
        y_structured: ay >= 2,
        z_structured: false,
        min_sin: second_smallest(m.angles.iter().map(|&s| libm::fabs(libm::sin(s))).collect()),
        min_cos: second_smallest(m.angles.iter().map(|&s| libm::fabs(libm::cos(s))).collect()),
        aligned_count_y: ay,
        aligned_count_x: ax,
        semi_plane_count: 0,
        semi_planes_aligned: false,
    }
}

/// Alternating cotangent sum and its scale `sum 1/alpha_i` for a
/// counterclockwise ring of triangles around `c`.
fn s_sum(c: [f64; 2], ring: &[[f64; 2]]) -> Result<(f64, f64), usize> {
    let n = ring.len();
    let area = |i: usize| {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        0.5 * ((a[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (a[1] - c[1]))
    };
    let mut s = 0.0;
    let mut scale = 0.0;
    for i in 0..n {
        let (dx, dy) = (ring[i][0] - c[0], ring[i][1] - c[1]);
        let r = libm::hypot(dx, dy);
        if libm::fabs(dy) < 1e-14 * r {
            return Err(i);
        }
        let cot = dx / dy;
        // the edge to ring[i] is shared by the cells before and after it
        let w = 1.0 / area((i + n - 1) % n) + 1.0 / area(i);
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        s += sign * cot * w;
        scale += 1.0 / area(i);
    }
    Ok((s, scale))
}

fn ring_points(mesh: &Mesh, m: &MacroElement, swap: bool) -> ([f64; 2], Vec<[f64; 2]>) {
    let p = |v: usize| {
        let q = mesh.vertex(v);
        if swap {
            [q[1], q[0]]
        } else {
            [q[0], q[1]]
        }
    };
    let c = p(m.center);
    let mut ring: Vec<(f64, usize, [f64; 2])> = m
        .ring_vertices
        .iter()
        .map(|&v| {
            let q = p(v);
            let mut a = libm::atan2(q[1] - c[1], q[0] - c[0]);
            if a < 0.0 {
                a += 2.0 * PI;
            }
            (a, v, q)
        })
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (c, ring.into_iter().map(|r| r.2).collect())
}

/// `S = sum_i (-1)^i cot(sigma_i) (1/|T| + 1/|T'|)` where `T`, `T'` are the
/// two cells sharing the edge `q0 qi`.
pub fn s_condition(mesh: &Mesh, m: &MacroElement) -> Result<f64, MacroError> {
    s_condition_scaled(mesh, m, false).map(|(s, _)| s)
}

/// `S` and its scale, optionally with x and y exchanged.
pub fn s_condition_scaled(mesh: &Mesh, m: &MacroElement, swap: bool) -> Result<(f64, f64), MacroError> {
    if mesh.kind() != CellKind::Triangle {
        return Err(MacroError::WrongDimension(2));
    }
    let (c, ring) = ring_points(mesh, m, swap);
    s_sum(c, &ring).map_err(|i| MacroError::Aligned(m.ring_vertices[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictReason {
    NoneAligned,
    OneAligned,
    TwoAligned,
    OddNv,
    EvenNvSNonzero,
    EvenNvSZero,
    /// 3D: a plane orthogonal to the un-enriched axis splits the star.
    PlaneSplit3d,
    PlaneUnsplit3d,
    SemiPlaneCase1,
    SemiPlaneCase2,
    SemiPlaneCase2Aligned,
    SemiPlaneCase3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityVerdict {
    pub predicted: Regularity,
    pub reason: VerdictReason,
    pub s_value: Option<f64>,
    /// `sum 1/alpha_i`, the scale the S test is relative to.
    pub s_scale: Option<f64>,
}

impl RegularityVerdict {
    fn new(regular: bool, reason: VerdictReason) -> Self {
        let predicted = if regular { Regularity::Regular } else { Regularity::Singular };
        RegularityVerdict { predicted, reason, s_value: None, s_scale: None }
    }

    pub fn is_regular(&self) -> bool {
        self.predicted == Regularity::Regular
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub alignment: f64,
    pub s: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { alignment: ALIGNMENT_TOL, s: S_TOL }
    }
}

/// Which 2D family a combination belongs to, and whether x and y play
/// swapped roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Family2d {
    Bubble { swap: bool },
    Quadratic { swap: bool },
}

pub(crate) fn family_2d(combo: &FECombo) -> Result<Family2d, MacroError> {
    use SpaceTag::*;
    if combo.pressure_space != P1 {
        return Err(MacroError::UnsupportedCombo("pressure must be P1"));
    }
    match combo.velocity_spaces.as_slice() {
        [P1b, P1] => Ok(Family2d::Bubble { swap: false }),
        [P1, P1b] => Ok(Family2d::Bubble { swap: true }),
        [P2, P1] => Ok(Family2d::Quadratic { swap: false }),
        [P1, P2] => Ok(Family2d::Quadratic { swap: true }),
        _ => Err(MacroError::UnsupportedCombo("expected p1b-p1, p1-p1b, p2-p1 or p1-p2 velocities")),
    }
}

/// Closed-form regularity of a 2D macro-element.
///
/// The enriched component's partner (the P1 one) fixes the critical
/// direction: for `p1b-p1` and `p2-p1` it is the horizontal line through the
/// center, for the swapped combinations the vertical one.
pub fn predict_regularity(
    mesh: &Mesh,
    m: &MacroElement,
    combo: &FECombo,
    tol: Tolerances,
) -> Result<RegularityVerdict, MacroError> {
    if mesh.kind() != CellKind::Triangle {
        return Err(MacroError::WrongDimension(2));
    }
    let family = family_2d(combo)?;
    let flags = classify_2d(mesh, m, tol.alignment);
    let swap = matches!(family, Family2d::Bubble { swap: true } | Family2d::Quadratic { swap: true });
    let aligned = if swap { flags.aligned_count_x } else { flags.aligned_count_y };
    let reason_aligned = match aligned {
        0 => VerdictReason::NoneAligned,
        1 => VerdictReason::OneAligned,
        _ => VerdictReason::TwoAligned,
    };
    match family {
        Family2d::Bubble { .. } => Ok(RegularityVerdict::new(aligned <= 1, reason_aligned)),
        Family2d::Quadratic { .. } => {
            if aligned >= 2 {
                return Ok(RegularityVerdict::new(false, VerdictReason::TwoAligned));
            }
            if aligned == 1 {
                return Ok(RegularityVerdict::new(true, VerdictReason::OneAligned));
            }
            let (s, scale) = s_condition_scaled(mesh, m, swap)?;
            let mut v = if m.n_v() % 2 == 1 {
                RegularityVerdict::new(true, VerdictReason::OddNv)
            } else if libm::fabs(s) > tol.s * scale {
                RegularityVerdict::new(true, VerdictReason::EvenNvSNonzero)
            } else {
                RegularityVerdict::new(false, VerdictReason::EvenNvSZero)
            };
            v.s_value = Some(s);
            v.s_scale = Some(scale);
            Ok(v)
        }
    }
}
