use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("cell {cell} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange { cell: usize, vertex: usize, count: usize },
    #[error("cell {cell} has {found} vertices, expected {expected}")]
    WrongArity { cell: usize, found: usize, expected: usize },
    #[error("cell {0} has zero measure")]
    Degenerate(usize),
    #[error("cells {0} and {1} do not meet conformingly")]
    Nonconforming(usize, usize),
    #[error("boundary facet {0} does not lie on exactly one cell")]
    FacetNotOnBoundary(usize),
    #[error("degenerate domain: {0}")]
    DegenerateDomain(&'static str),
    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),
    #[error("mesh still has {offending} structured macro-element(s) after {passes} passes")]
    NotUnstructured { passes: usize, offending: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeError {
    #[error("space {0:?} is not available on {1:?} cells")]
    Incompatible(crate::fespace::SpaceTag, crate::mesh::CellKind),
    #[error("no quadrature rule of degree {0} for {1:?}")]
    UnsupportedDegree(usize, crate::mesh::CellKind),
    #[error("unsupported element combination: {0}")]
    UnsupportedCombo(&'static str),
    #[error("point lies outside the reference cell")]
    OutsideReference,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("factorization broke down at pivot {index} (value {pivot:e}); the matrix is not positive definite")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("missing boundary tag {0}")]
    MissingTag(i32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MacroError {
    #[error("unsupported element combination for this predicate: {0}")]
    UnsupportedCombo(&'static str),
    #[error("ring vertex {0} is aligned with the center; S is undefined")]
    Aligned(usize),
    #[error("macro-element is not a {0}D star")]
    WrongDimension(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
