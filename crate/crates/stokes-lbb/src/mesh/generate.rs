use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellKind, Mesh, Point};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
}

fn finish_2d(
    verts: Vec<Point>,
    cells: Vec<Vec<usize>>,
    lo: Point,
    hi: Point,
) -> Result<Mesh, MeshError> {
    let mut m = Mesh::new(CellKind::Triangle, verts, cells, vec![])?;
    m.tag_box_boundary(lo, hi);
    Ok(m)
}

/// Uniform grid with every rectangle cut by its lower-left to upper-right
/// diagonal. Interior vertices have six neighbours: two horizontal, two
/// vertical, two diagonal.
pub fn gen_structured_tri(nx: usize, ny: usize, domain: Rect) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::DegenerateDomain("nx and ny must be positive"));
    }
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(MeshError::DegenerateDomain("empty rectangle"));
    }
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx as f64;
            let y = domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny as f64;
            verts.push([x, y, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    finish_2d(
        verts,
        cells,
        [domain.x0, domain.y0, 0.0],
        [domain.x1, domain.y1, 0.0],
    )
}

/// Herringbone mesh of the unit square built on the lattice points
/// `(i/nx, j/ny)` with `i + j` even, plus every point of the bottom and top
/// rows. Each lattice diamond is cut along its vertical diagonal, so there are
/// vertical edges through every interior vertex but no horizontal ones.
/// For `nx >= ny` every interior edge makes at least 45 degrees with the
/// horizontal.
pub fn gen_zigzag(nx: usize, ny: usize) -> Result<Mesh, MeshError> {
    if nx < 2 || ny < 2 {
        return Err(MeshError::DegenerateDomain("zigzag mesh needs nx, ny >= 2"));
    }
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut verts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if (i + j) % 2 == 0 || j == 0 || j == ny {
                index.insert((i, j), verts.len());
                verts.push([i as f64 / nx as f64, j as f64 / ny as f64, 0.0]);
            }
        }
    }
    let at = |i: usize, j: usize| index[&(i, j)];
    let mut cells = Vec::new();
    for b in 0..=ny {
        for a in 0..=nx {
            if (a + b) % 2 == 0 {
                continue;
            }
            let s = at(a, b.saturating_sub(1));
            let n = at(a, (b + 1).min(ny));
            if a > 0 {
                cells.push(vec![s, n, at(a - 1, b)]);
            }
            if a < nx {
                cells.push(vec![s, at(a + 1, b), n]);
            }
        }
    }
    finish_2d(verts, cells, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0])
}

/// Moves interior vertices along x by `uniform(-amplitude, amplitude)`.
/// Each move is halved until every incident cell keeps at least 10% of its
/// unperturbed measure.
pub fn gen_perturbed(base: &Mesh, amplitude: f64, seed: u64) -> Result<Mesh, MeshError> {
    if base.dim() != 2 {
        return Err(MeshError::Unsupported("perturbation is defined for 2D meshes"));
    }
    if amplitude <= 0.0 {
        return Ok(base.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundary = base.boundary_vertex_mask();
    let vc = base.vertex_cells();
    let orig: Vec<f64> = (0..base.num_cells()).map(|c| base.cell_measure(c)).collect();
    let mut mesh = base.clone();
    for v in 0..mesh.num_vertices() {
        if boundary[v] {
            continue;
        }
        let mut dx = rng.random_range(-amplitude..amplitude);
        let x0 = mesh.vertices[v][0];
        for _ in 0..60 {
            mesh.vertices[v][0] = x0 + dx;
            if vc[v].iter().all(|&c| mesh.signed_cell_measure(c) >= 0.1 * orig[c]) {
                break;
            }
            dx *= 0.5;
            mesh.vertices[v][0] = x0;
        }
        if vc[v].iter().any(|&c| mesh.signed_cell_measure(c) < 0.1 * orig[c]) {
            mesh.vertices[v][0] = x0;
        }
    }
    Ok(mesh)
}

/// Extrudes a triangle mesh into `layers` prism layers of total `height`.
/// Every prism is cut into three tetrahedra; the quad-face diagonals join
/// the bottom of the larger vertex index to the top of the smaller one, which
/// keeps neighbouring prisms conforming.
pub fn gen_extruded_tet(base2d: &Mesh, layers: usize, height: f64) -> Result<Mesh, MeshError> {
    if base2d.kind() != CellKind::Triangle {
        return Err(MeshError::Unsupported("extrusion needs a triangle mesh"));
    }
    if layers == 0 || height <= 0.0 {
        return Err(MeshError::DegenerateDomain("layers and height must be positive"));
    }
    let nv = base2d.num_vertices();
    let mut verts = Vec::with_capacity(nv * (layers + 1));
    for k in 0..=layers {
        let z = height * k as f64 / layers as f64;
        for p in base2d.vertices() {
            verts.push([p[0], p[1], z]);
        }
    }
    let mut cells = Vec::with_capacity(3 * layers * base2d.num_cells());
    for k in 0..layers {
        for tri in base2d.cells() {
            let mut t = [tri[0], tri[1], tri[2]];
            t.sort_unstable();
            let lo = |i: usize| k * nv + t[i];
            let hi = |i: usize| (k + 1) * nv + t[i];
            cells.push(vec![lo(0), lo(1), lo(2), hi(0)]);
            cells.push(vec![lo(1), lo(2), hi(0), hi(1)]);
            cells.push(vec![lo(2), hi(0), hi(1), hi(2)]);
        }
    }
    let (lo, hi) = bounding_box(base2d.vertices());
    let mut m = Mesh::new(CellKind::Tetrahedron, verts, cells, vec![])?;
    m.tag_box_boundary([lo[0], lo[1], 0.0], [hi[0], hi[1], height]);
    Ok(m)
}

/// Structured tetrahedral mesh of the unit cube: `n^3` cubes, each cut into
/// the six Kuhn tetrahedra along the main diagonal.
pub fn gen_kuhn_cube(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::DegenerateDomain("n must be positive"));
    }
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut verts = Vec::with_capacity((n + 1) * (n + 1) * (n + 1));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                verts.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for p in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = vec![id(c[0], c[1], c[2])];
                    for axis in p {
                        c[axis] += 1;
                        tet.push(id(c[0], c[1], c[2]));
                    }
                    cells.push(tet);
                }
            }
        }
    }
    let mut m = Mesh::new(CellKind::Tetrahedron, verts, cells, vec![])?;
    m.tag_box_boundary([0.0; 3], [1.0; 3]);
    Ok(m)
}

/// Four rectangles around a central vertex at the origin.
/// `widths = [left, right]`, `heights = [below, above]`.
pub fn gen_quad_macro(widths: [f64; 2], heights: [f64; 2]) -> Result<Mesh, MeshError> {
    if widths.iter().chain(heights.iter()).any(|&s| !(s > 0.0)) {
        return Err(MeshError::DegenerateDomain("sizes must be positive"));
    }
    let xs = [-widths[0], 0.0, widths[1]];
    let ys = [-heights[0], 0.0, heights[1]];
    let mut verts = Vec::with_capacity(9);
    for y in ys {
        for x in xs {
            verts.push([x, y, 0.0]);
        }
    }
    let id = |i: usize, j: usize| 3 * j + i;
    let mut cells = Vec::with_capacity(4);
    for j in 0..2 {
        for i in 0..2 {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut m = Mesh::new(CellKind::Quadrilateral, verts, cells, vec![])?;
    m.tag_box_boundary([xs[0], ys[0], 0.0], [xs[2], ys[2], 0.0]);
    Ok(m)
}

fn bounding_box(pts: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
