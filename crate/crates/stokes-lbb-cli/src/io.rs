//! Gmsh MSH 2.2 (ASCII) and legacy VTK files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use stokes_lbb::mesh::{CellKind, Facet, Mesh, Point};
use stokes_lbb::MeshError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("field `{name}` has {found} values, expected {expected}")]
    FieldLength { name: String, found: usize, expected: usize },
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse { line, msg: msg.into() }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.display().to_string(), source })?;
        }
    }
    fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.it.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.last = i + 1;
                return Some((i + 1, l));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        self.next().ok_or_else(|| parse_err(self.last, format!("unexpected end of file, expected {what}")))
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, IoError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(line, format!("bad or missing {what}")))
}

/// Parses an ASCII MSH 2.2 document. Tetrahedra make a 3D mesh whose
/// triangles are boundary facets; otherwise triangles or quadrangles are
/// the cells and 2-node lines the facets. The first (physical) tag is kept.
pub fn parse_msh(text: &str) -> Result<Mesh, IoError> {
    let mut lines = Lines { it: text.lines().enumerate(), last: 0 };
    let mut nodes: Vec<Point> = Vec::new();
    let mut ids: HashMap<usize, usize> = HashMap::new();
    // (gmsh type, tag, node ids, line)
    let mut elements: Vec<(usize, i32, Vec<usize>, usize)> = Vec::new();
    let mut seen_format = false;
    while let Some((ln, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let (ln, v) = lines.expect("format line")?;
                let mut t = v.split_whitespace();
                let version: f64 = num(t.next(), ln, "version")?;
                let ftype: u32 = num(t.next(), ln, "file type")?;
                if !(2.0..3.0).contains(&version) || ftype != 0 {
                    return Err(parse_err(ln, "only ASCII MSH 2.x is supported"));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let (ln, c) = lines.expect("node count")?;
                let n: usize = num(Some(c), ln, "node count")?;
                for _ in 0..n {
                    let (ln, l) = lines.expect("node")?;
                    let mut t = l.split_whitespace();
                    let id: usize = num(t.next(), ln, "node id")?;
                    let mut p = [0.0; 3];
                    for x in &mut p {
                        *x = num(t.next(), ln, "coordinate")?;
                    }
                    if ids.insert(id, nodes.len()).is_some() {
                        return Err(parse_err(ln, format!("duplicate node id {id}")));
                    }
                    nodes.push(p);
                }
                let (ln, e) = lines.expect("$EndNodes")?;
                if e != "$EndNodes" {
                    return Err(parse_err(ln, "expected $EndNodes"));
                }
            }
            "$Elements" => {
                let (ln, c) = lines.expect("element count")?;
                let n: usize = num(Some(c), ln, "element count")?;
                for _ in 0..n {
                    let (ln, l) = lines.expect("element")?;
                    let t: Vec<&str> = l.split_whitespace().collect();
                    let ty: usize = num(t.get(1).copied(), ln, "element type")?;
                    let ntags: usize = num(t.get(2).copied(), ln, "tag count")?;
                    let tag: i32 = if ntags > 0 { num(t.get(3).copied(), ln, "tag")? } else { 0 };
                    let verts: Vec<usize> = t
                        .iter()
                        .skip(3 + ntags)
                        .map(|s| s.parse::<usize>().map_err(|_| parse_err(ln, "bad node reference")))
                        .collect::<Result<_, _>>()?;
                    let expected = match ty {
                        1 => 2,
                        2 => 3,
                        3 | 4 => 4,
                        15 => 1,
                        _ => return Err(parse_err(ln, format!("unsupported element type {ty}"))),
                    };
                    if verts.len() != expected {
                        return Err(parse_err(ln, format!("element type {ty} needs {expected} nodes")));
                    }
                    let local = verts
                        .iter()
                        .map(|v| ids.get(v).copied().ok_or_else(|| parse_err(ln, format!("unknown node {v}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    elements.push((ty, tag, local, ln));
                }
                let (ln, e) = lines.expect("$EndElements")?;
                if e != "$EndElements" {
                    return Err(parse_err(ln, "expected $EndElements"));
                }
            }
            s if s.starts_with('$') => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            _ => return Err(parse_err(ln, "content outside of a section")),
        }
    }
    if !seen_format {
        return Err(parse_err(1, "missing $MeshFormat"));
    }
    let has = |t: usize| elements.iter().any(|e| e.0 == t);
    let (kind, cell_ty, facet_ty) = if has(4) {
        (CellKind::Tetrahedron, 4, 2)
    } else if has(2) && has(3) {
        return Err(parse_err(lines.last, "mixed triangle and quadrangle meshes are not supported"));
    } else if has(2) {
        (CellKind::Triangle, 2, 1)
    } else if has(3) {
        (CellKind::Quadrilateral, 3, 1)
    } else {
        return Err(parse_err(lines.last, "no cells found"));
    };
    let cells = elements.iter().filter(|e| e.0 == cell_ty).map(|e| e.2.clone()).collect();
    let facets = elements
        .iter()
        .filter(|e| e.0 == facet_ty)
        .map(|e| Facet { vertices: e.2.clone(), tag: e.1 })
        .collect();
    if kind.dim() == 2 && nodes.iter().any(|p| p[2] != 0.0) {
        return Err(parse_err(lines.last, "2D cells with nonzero z coordinates"));
    }
    Ok(Mesh::new(kind, nodes, cells, facets)?)
}

pub fn load_msh(path: &Path) -> Result<Mesh, IoError> {
    parse_msh(&read(path)?)
}

/// MSH 2.2 ASCII text: boundary facets first with their tag, then cells.
pub fn format_msh(mesh: &Mesh) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i + 1, p[0], p[1], p[2]);
    }
    let (cell_ty, facet_ty) = match mesh.kind() {
        CellKind::Triangle => (2, 1),
        CellKind::Quadrilateral => (3, 1),
        CellKind::Tetrahedron => (4, 2),
    };
    let facets = mesh.boundary_facets();
    let _ = writeln!(s, "$EndNodes\n$Elements\n{}", facets.len() + mesh.num_cells());
    let mut id = 1;
    for f in facets {
        let _ = write!(s, "{id} {facet_ty} 2 {} {}", f.tag, f.tag);
        for v in &f.vertices {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    for c in mesh.cells() {
        let _ = write!(s, "{id} {cell_ty} 2 0 0");
        for v in c {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

pub fn save_msh(mesh: &Mesh, path: &Path) -> Result<(), IoError> {
    write_file(path, &format_msh(mesh))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLocation {
    Point,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<'a> {
    pub name: &'a str,
    pub location: FieldLocation,
    pub values: &'a [f64],
}

impl<'a> Field<'a> {
    pub fn point(name: &'a str, values: &'a [f64]) -> Self {
        Field { name, location: FieldLocation::Point, values }
    }

    pub fn cell(name: &'a str, values: &'a [f64]) -> Self {
        Field { name, location: FieldLocation::Cell, values }
    }
}

/// Legacy ASCII VTK unstructured grid with scalar point and cell data.
pub fn format_vtk(mesh: &Mesh, fields: &[Field]) -> Result<String, IoError> {
    for f in fields {
        let expected = match f.location {
            FieldLocation::Point => mesh.num_vertices(),
            FieldLocation::Cell => mesh.num_cells(),
        };
        if f.values.len() != expected {
            return Err(IoError::FieldLength { name: f.name.to_string(), found: f.values.len(), expected });
        }
    }
    let mut s = String::from("# vtk DataFile Version 3.0\nstokes-lbb\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let nv = mesh.kind().vertex_count();
    let _ = writeln!(s, "CELLS {} {}", mesh.num_cells(), mesh.num_cells() * (nv + 1));
    for c in mesh.cells() {
        let _ = write!(s, "{nv}");
        for v in c {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let vtk_type = match mesh.kind() {
        CellKind::Triangle => 5,
        CellKind::Quadrilateral => 9,
        CellKind::Tetrahedron => 10,
    };
    let _ = writeln!(s, "CELL_TYPES {}", mesh.num_cells());
    for _ in 0..mesh.num_cells() {
        let _ = writeln!(s, "{vtk_type}");
    }
    for (loc, header, n) in [
        (FieldLocation::Point, "POINT_DATA", mesh.num_vertices()),
        (FieldLocation::Cell, "CELL_DATA", mesh.num_cells()),
    ] {
        let sel: Vec<&Field> = fields.iter().filter(|f| f.location == loc).collect();
        if sel.is_empty() {
            continue;
        }
        let _ = writeln!(s, "{header} {n}");
        for f in sel {
            let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name.replace(' ', "_"));
            for v in f.values {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    Ok(s)
}

pub fn save_vtk(mesh: &Mesh, fields: &[Field], path: &Path) -> Result<(), IoError> {
    write_file(path, &format_vtk(mesh, fields)?)
}

/// Point coordinates of a legacy VTK document.
pub fn parse_vtk_points(text: &str) -> Result<Vec<Point>, IoError> {
    let mut lines = Lines { it: text.lines().enumerate(), last: 0 };
    while let Some((ln, l)) = lines.next() {
        if let Some(rest) = l.strip_prefix("POINTS") {
            let n: usize = num(rest.split_whitespace().next(), ln, "point count")?;
            let mut out = Vec::with_capacity(n);
            let mut buf: Vec<f64> = Vec::new();
            while out.len() < n {
                let (ln, l) = lines.expect("coordinates")?;
                for t in l.split_whitespace() {
                    buf.push(num(Some(t), ln, "coordinate")?);
                    if buf.len() == 3 {
                        out.push([buf[0], buf[1], buf[2]]);
                        buf.clear();
                    }
                }
            }
            return Ok(out);
        }
    }
    Err(parse_err(lines.last, "no POINTS section"))
}
