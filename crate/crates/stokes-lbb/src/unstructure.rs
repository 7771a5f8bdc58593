//! Post-processing that breaks axis-aligned vertex structure so that the
//! partially enriched elements become stable.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::MeshError;
use crate::macroelement::build_macroelements;
use crate::mesh::{gen_perturbed, gen_structured_tri, CellKind, Mesh, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

impl FromStr for Axis {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, MeshError> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            _ => Err(MeshError::Unsupported("axis must be x or y")),
        }
    }
}

/// `axis = X` removes almost vertical edge pairs by moving vertices along
/// x; `axis = Y` removes almost horizontal pairs by moving along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnstructureConfig {
    pub r: f64,
    pub axis: Axis,
    /// Mesh size; taken from the input mesh when `None`.
    pub h: Option<f64>,
}

impl UnstructureConfig {
    pub fn new(r: f64, axis: Axis) -> Result<Self, MeshError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(MeshError::DegenerateDomain("unstructuring factor must lie in (0, 1)"));
        }
        Ok(UnstructureConfig { r, axis, h: None })
    }

    pub fn h(&self, mesh: &Mesh) -> f64 {
        self.h.unwrap_or_else(|| mesh.metrics().h)
    }

    pub fn h_r(&self, mesh: &Mesh) -> f64 {
        self.r * self.h(mesh)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnstructureOutcome {
    pub mesh: Mesh,
    /// Mesh size the threshold `h_r = r h` was computed from.
    pub h: f64,
    pub passes: usize,
    pub moved: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    pub pass: bool,
    /// Centers of macro-elements with two or more edges closer than `h_r` to the axis.
    pub offending: Vec<usize>,
    /// Smallest, over macro-elements, second-smallest `|offset| / h`.
    pub min_margin: f64,
}

fn signed_area(p: &[Point], cell: &[usize]) -> f64 {
    let (a, b, c) = (p[cell[0]], p[cell[1]], p[cell[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

const MAX_PASSES: usize = 5;

// offsets placed exactly at `h_r` come back a few ulps short after subtraction
const REL_SLACK: f64 = 1e-9;

/// One sweep over interior vertices in index order: when two ring vertices
/// of a star lie within `h_r` of the center along the axis, the center is
/// moved so that the first of them ends exactly `h_r` away (or, when that
/// leaves a second pair, by the smallest shift clearing the star). Moves that
/// would flatten a cell are halved until valid. Returns the new mesh and
/// the number of moved vertices.
pub fn algorithm1_pass(mesh: &Mesh, cfg: &UnstructureConfig, warnings: &mut Vec<String>) -> Result<(Mesh, usize), MeshError> {
    if mesh.kind() != CellKind::Triangle {
        return Err(MeshError::Unsupported("unstructuring needs a triangle mesh"));
    }
    let near = cfg.h_r(mesh) * (1.0 - REL_SLACK);
    let hr = cfg.h_r(mesh);
    let ax = cfg.axis.index();
    let vcells = mesh.vertex_cells();
    let mut pts: Vec<Point> = mesh.vertices().to_vec();
    let mut moved = 0;
    // rings are topological, so they stay valid while vertices move
    for m in &build_macroelements(mesh).macros {
        let q0 = m.center;
        let d: Vec<f64> = m.ring_vertices.iter().map(|&v| pts[v][ax] - pts[q0][ax]).collect();
        let Some(i) = (0..d.len()).find(|&i| d[i].abs() < near && (i + 1..d.len()).any(|j| d[j].abs() < near)) else {
            continue;
        };
        let mut shift = if d[i] > 0.0 { -(hr - d[i]) } else { hr + d[i] };
        let near_after = |sh: f64| d.iter().filter(|&&x| (x - sh).abs() < near).count();
        if near_after(shift) > 1 {
            // three or more ring vertices in the band: the first pair's move
            // pushes another one in, so take the smallest move clearing them all
            let best = d
                .iter()
                .filter(|x| x.abs() < near)
                .flat_map(|&x| [x - hr, x + hr])
                .filter(|&sh| near_after(sh) <= 1)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()));
            if let Some(b) = best {
                shift = b;
            }
        }
        let start = pts[q0][ax];
        let mut halvings = 0;
        loop {
            pts[q0][ax] = start + shift;
            if vcells[q0].iter().all(|&c| signed_area(&pts, mesh.cell(c)) > 0.0) {
                break;
            }
            shift *= 0.5;
            halvings += 1;
            if halvings > 50 {
                pts[q0][ax] = start;
                break;
            }
        }
        if halvings > 0 {
            warnings.push(format!("vertex {q0}: move scaled back by 2^-{halvings} to keep cells valid"));
        }
        if pts[q0][ax] != start {
            moved += 1;
        }
    }
    Ok((mesh.with_coordinates(pts)?, moved))
}

/// Repeats [`algorithm1_pass`] with a fixed `h_r` until the mesh is
/// uniformly unstructured, at most five times.
pub fn apply_algorithm1(mesh: &Mesh, cfg: &UnstructureConfig) -> Result<UnstructureOutcome, MeshError> {
    let h = cfg.h(mesh);
    let fixed = UnstructureConfig { h: Some(h), ..*cfg };
    let mut warnings = Vec::new();
    let mut moved = 0;
    let mut current = mesh.clone();
    for pass in 1..=MAX_PASSES {
        let (next, k) = algorithm1_pass(&current, &fixed, &mut warnings)?;
        current = next;
        moved += k;
        if verify_uniform(&current, &fixed).pass {
            return Ok(UnstructureOutcome { mesh: current, h, passes: pass, moved, warnings });
        }
    }
    let report = verify_uniform(&current, &fixed);
    Err(MeshError::NotUnstructured { passes: MAX_PASSES, offending: report.offending.len() })
}

/// Every interior star must have at most one edge within `h_r` of the axis.
pub fn verify_uniform(mesh: &Mesh, cfg: &UnstructureConfig) -> UniformityReport {
    let h = cfg.h(mesh);
    let hr = cfg.r * h;
    let ax = cfg.axis.index();
    let mut offending = Vec::new();
    let mut min_margin = f64::INFINITY;
    for m in build_macroelements(mesh).macros {
        let c = mesh.vertex(m.center)[ax];
        let mut d: Vec<f64> = m.ring_vertices.iter().map(|&v| (mesh.vertex(v)[ax] - c).abs()).collect();
        d.sort_by(f64::total_cmp);
        if d.len() >= 2 {
            if d[1] < hr * (1.0 - REL_SLACK) {
                offending.push(m.center);
            }
            min_margin = min_margin.min(d[1] / h);
        }
    }
    UniformityReport { pass: offending.is_empty(), offending, min_margin }
}

/// Uniformly y-unstructured mesh of the unit square with `n` intervals per
/// side: a structured mesh with interior abscissas jittered by up to
/// `0.3 / n`, then the repair along y with `r = 0.15`.
pub fn unstructured_family(n: usize, seed: u64) -> Result<Mesh, MeshError> {
    let base = gen_structured_tri(n, n, Rect::UNIT)?;
    let jittered = gen_perturbed(&base, 0.3 / n as f64, seed)?;
    let cfg = UnstructureConfig::new(0.15, Axis::Y)?;
    Ok(apply_algorithm1(&jittered, &cfg)?.mesh)
}
