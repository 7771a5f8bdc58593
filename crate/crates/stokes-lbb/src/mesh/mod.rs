//! Simplicial and quadrilateral meshes with the topology queries the
//! element and macro-element code needs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::MeshError;

mod generate;

pub use generate::{
    gen_extruded_tet, gen_kuhn_cube, gen_perturbed, gen_quad_macro, gen_structured_tri,
    gen_zigzag, Rect,
};

/// Boundary tags used by the rectangle generators.
pub const TAG_BOTTOM: i32 = 1;
pub const TAG_RIGHT: i32 = 2;
pub const TAG_TOP: i32 = 3;
pub const TAG_LEFT: i32 = 4;
pub const TAG_FLOOR: i32 = 5;
pub const TAG_CEILING: i32 = 6;

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Tetrahedron,
    Quadrilateral,
}

impl CellKind {
    pub fn vertex_count(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Tetrahedron | CellKind::Quadrilateral => 4,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            CellKind::Tetrahedron => 3,
            _ => 2,
        }
    }

    /// Local vertex lists of the cell facets (edges in 2D, faces in 3D).
    pub fn local_facets(self) -> &'static [&'static [usize]] {
        match self {
            CellKind::Triangle => &[&[0, 1], &[1, 2], &[2, 0]],
            CellKind::Quadrilateral => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            CellKind::Tetrahedron => &[&[1, 2, 3], &[0, 2, 3], &[0, 1, 3], &[0, 1, 2]],
        }
    }

    /// Local vertex pairs of the cell edges.
    pub fn local_edges(self) -> &'static [[usize; 2]] {
        match self {
            CellKind::Triangle => &[[0, 1], [1, 2], [2, 0]],
            CellKind::Quadrilateral => &[[0, 1], [1, 2], [2, 3], [3, 0]],
            CellKind::Tetrahedron => &[[0, 1], [1, 2], [2, 0], [0, 3], [1, 3], [2, 3]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub tag: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub h: f64,
    pub min_area: f64,
    pub shape_ratio: f64,
}

/// Immutable mesh. Cells are stored flat; vertex order is counterclockwise
/// in 2D and gives a positive determinant in 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    kind: CellKind,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    boundary_facets: Vec<Facet>,
}

pub fn sorted_key(v: &[usize]) -> Vec<usize> {
    let mut k = v.to_vec();
    k.sort_unstable();
    k
}

fn signed_measure(kind: CellKind, p: &[Point]) -> f64 {
    match kind {
        CellKind::Triangle => {
            0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
        }
        CellKind::Quadrilateral => {
            let mut s = 0.0;
            for i in 0..4 {
                let a = p[i];
                let b = p[(i + 1) % 4];
                s += a[0] * b[1] - b[0] * a[1];
            }
            0.5 * s
        }
        CellKind::Tetrahedron => {
            let a = sub(p[1], p[0]);
            let b = sub(p[2], p[0]);
            let c = sub(p[3], p[0]);
            dot(a, cross(b, c)) / 6.0
        }
    }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    libm::sqrt(dot(sub(a, b), sub(a, b)))
}

impl Mesh {
    /// Builds a mesh, reorienting cells as needed and checking validity.
    pub fn new(
        kind: CellKind,
        vertices: Vec<Point>,
        cells: Vec<Vec<usize>>,
        boundary_facets: Vec<Facet>,
    ) -> Result<Mesh, MeshError> {
        let nv = kind.vertex_count();
        let mut flat = Vec::with_capacity(cells.len() * nv);
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != nv {
                return Err(MeshError::WrongArity { cell: c, found: cell.len(), expected: nv });
            }
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        cell: c,
                        vertex: v,
                        count: vertices.len(),
                    });
                }
            }
            let mut cell = cell.clone();
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let m = signed_measure(kind, &pts);
            if m == 0.0 || !m.is_finite() {
                return Err(MeshError::Degenerate(c));
            }
            if m < 0.0 {
                match kind {
                    CellKind::Triangle => cell.swap(1, 2),
                    CellKind::Tetrahedron => cell.swap(2, 3),
                    CellKind::Quadrilateral => cell.swap(1, 3),
                }
            }
            flat.extend_from_slice(&cell);
        }
        let mesh = Mesh { kind, vertices, cells: flat, boundary_facets };
        mesh.check_conforming()?;
        mesh.check_boundary_facets()?;
        Ok(mesh)
    }

    /// Same topology with new coordinates; fails if a cell loses positive measure.
    pub fn with_coordinates(&self, vertices: Vec<Point>) -> Result<Mesh, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::DegenerateDomain("coordinate count changed"));
        }
        let out = Mesh { vertices, ..self.clone() };
        for c in 0..out.num_cells() {
            if out.signed_cell_measure(c) <= 0.0 {
                return Err(MeshError::Degenerate(c));
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / self.kind.vertex_count()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.kind.vertex_count();
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.kind.vertex_count())
    }

    pub fn boundary_facets(&self) -> &[Facet] {
        &self.boundary_facets
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn signed_cell_measure(&self, c: usize) -> f64 {
        signed_measure(self.kind, &self.cell_points(c))
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        libm::fabs(self.signed_cell_measure(c))
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max(dist(p[i], p[j]));
            }
        }
        d
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let p = self.cell_points(c);
        let n = p.len() as f64;
        let mut s = [0.0; 3];
        for q in &p {
            for k in 0..3 {
                s[k] += q[k] / n;
            }
        }
        s
    }

    /// Mesh size, smallest cell measure and the worst `diam^d / measure`.
    pub fn metrics(&self) -> MeshMetrics {
        let mut h: f64 = 0.0;
        let mut min_area = f64::INFINITY;
        let mut shape: f64 = 0.0;
        let d = self.dim() as f64;
        for c in 0..self.num_cells() {
            let diam = self.cell_diameter(c);
            let m = self.cell_measure(c);
            h = h.max(diam);
            min_area = min_area.min(m);
            shape = shape.max(libm::pow(diam, d) / m);
        }
        MeshMetrics { h, min_area, shape_ratio: shape }
    }

    /// Map from sorted facet key to the cells containing it.
    pub fn facet_cells(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for c in 0..self.num_cells() {
            let cell = self.cell(c);
            for f in self.kind.local_facets() {
                let key = sorted_key(&f.iter().map(|&i| cell[i]).collect::<Vec<_>>());
                map.entry(key).or_default().push(c);
            }
        }
        map
    }

    /// Sorted edge keys numbered lexicographically.
    pub fn edges(&self) -> BTreeMap<[usize; 2], usize> {
        let mut set: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for cell in self.cells() {
            for e in self.kind.local_edges() {
                let (a, b) = (cell[e[0]], cell[e[1]]);
                set.insert([a.min(b), a.max(b)], 0);
            }
        }
        for (i, v) in set.values_mut().enumerate() {
            *v = i;
        }
        set
    }

    /// Facets lying on exactly one cell.
    pub fn topological_boundary(&self) -> Vec<Vec<usize>> {
        self.facet_cells()
            .into_iter()
            .filter(|(_, cs)| cs.len() == 1)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for f in self.topological_boundary() {
            for v in f {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut vc = vec![Vec::new(); self.num_vertices()];
        for (c, cell) in self.cells().enumerate() {
            for &v in cell {
                vc[v].push(c);
            }
        }
        vc
    }

    /// Vertices sharing an edge with each vertex, sorted by index.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_vertices()];
        for e in self.edges().keys() {
            nb[e[0]].push(e[1]);
            nb[e[1]].push(e[0]);
        }
        for n in &mut nb {
            n.sort_unstable();
        }
        nb
    }

    fn check_conforming(&self) -> Result<(), MeshError> {
        let fc = self.facet_cells();
        for cs in fc.values() {
            if cs.len() > 2 {
                return Err(MeshError::Nonconforming(cs[0], cs[2]));
            }
        }
        if self.dim() != 2 {
            return Ok(());
        }
        // A hanging vertex shows up as a vertex strictly inside a boundary edge
        // that is itself joined to the edge's end point by another boundary edge.
        let mut bnd_adj: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (k, cs) in &fc {
            if cs.len() == 1 {
                bnd_adj.entry(k[0]).or_default().push((k[1], cs[0]));
                bnd_adj.entry(k[1]).or_default().push((k[0], cs[0]));
            }
        }
        for (k, cs) in &fc {
            if cs.len() != 1 {
                continue;
            }
            let (a, b) = (self.vertices[k[0]], self.vertices[k[1]]);
            let len2 = dot(sub(b, a), sub(b, a));
            for &(v, c2) in bnd_adj.get(&k[0]).into_iter().flatten() {
                if v == k[1] {
                    continue;
                }
                let p = self.vertices[v];
                let ap = sub(p, a);
                let ab = sub(b, a);
                let crs = ap[0] * ab[1] - ap[1] * ab[0];
                let t = dot(ap, ab) / len2;
                if libm::fabs(crs) <= 1e-12 * len2 && t > 1e-12 && t < 1.0 - 1e-12 {
                    return Err(MeshError::Nonconforming(cs[0].min(c2), cs[0].max(c2)));
                }
            }
        }
        Ok(())
    }

    fn check_boundary_facets(&self) -> Result<(), MeshError> {
        if self.boundary_facets.is_empty() {
            return Ok(());
        }
        let fc = self.facet_cells();
        for (i, f) in self.boundary_facets.iter().enumerate() {
            match fc.get(&sorted_key(&f.vertices)) {
                Some(cs) if cs.len() == 1 => {}
                _ => return Err(MeshError::FacetNotOnBoundary(i)),
            }
        }
        Ok(())
    }

    /// Tags every topological boundary facet of an axis-aligned box domain.
    pub(crate) fn tag_box_boundary(&mut self, lo: Point, hi: Point) {
        let tol = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        let mut facets = Vec::new();
        for key in self.topological_boundary() {
            let pts: Vec<Point> = key.iter().map(|&v| self.vertices[v]).collect();
            let on = |axis: usize, val: f64| pts.iter().all(|p| libm::fabs(p[axis] - val) <= tol);
            let tag = if self.dim() == 3 && on(2, lo[2]) {
                TAG_FLOOR
            } else if self.dim() == 3 && on(2, hi[2]) {
                TAG_CEILING
            } else if on(1, lo[1]) {
                TAG_BOTTOM
            } else if on(0, hi[0]) {
                TAG_RIGHT
            } else if on(1, hi[1]) {
                TAG_TOP
            } else if on(0, lo[0]) {
                TAG_LEFT
            } else {
                0
            };
            facets.push(Facet { vertices: key, tag });
        }
        self.boundary_facets = facets;
    }

    /// Applies an affine map `x -> s * x + t` to every vertex.
    pub fn scaled(&self, s: f64, t: Point) -> Mesh {
        let mut out = self.clone();
        for p in &mut out.vertices {
            for k in 0..3 {
                p[k] = s * p[k] + t[k];
            }
        }
        out
    }

    /// Exchanges the x and y coordinates (cells are reoriented).
    pub fn swapped_xy(&self) -> Mesh {
        let verts = self.vertices.iter().map(|p| [p[1], p[0], p[2]]).collect();
        let cells = self.cells().map(|c| c.to_vec()).collect();
        Mesh::new(self.kind, verts, cells, self.boundary_facets.clone())
            .expect("reflection preserves validity")
    }
}
