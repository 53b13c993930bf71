use thiserror::Error;

/// Errors shared across the mesh, energy, solver, seeding and I/O layers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("face ({0}, {1}, {2}) is shared by more than two tetrahedra")]
    NonManifoldFace(usize, usize, usize),
    #[error("vertex {0} is not referenced by any tetrahedron")]
    DanglingVertex(usize),
    #[error("vertex {0} lies on the boundary")]
    BoundaryVertex(usize),
    #[error("edge ({0}, {1}) does not exist in the mesh")]
    NoSuchEdge(usize, usize),
    #[error("triangle is degenerate (vanishing area)")]
    DegenerateFace,
    #[error("tetrahedron is degenerate or inverted")]
    DegenerateTet,
    #[error("mesh contains no tetrahedra")]
    EmptyMesh,
    #[error("tetrahedron {0} has near-zero volume on import")]
    ZeroVolumeTet(usize),
    #[error("grid resolution below 2x2x2 cells; decrease the target edge length")]
    ResolutionTooCoarse,
    #[error("point set is degenerate (fewer than 4 points or all coplanar)")]
    DegenerateInput,
    #[error("duplicate points in input set")]
    DuplicatePoints,
    #[error("cavity is infeasible at the starting position of vertex {0}")]
    InfeasibleStart(usize),
    #[error("mesh validation failed: {0}")]
    ValidationFailure(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported format {0:?}")]
    UnsupportedFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
