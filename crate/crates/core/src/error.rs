use thiserror::Error;

/// Reasons a triangle mesh is rejected as a simplicial surface.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} references vertex {vertex}, but only {vertex_count} vertices exist")]
    VertexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    UnreferencedVertex { vertex: usize },
    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("edge ({0}, {1}) has inconsistent orientation in its two faces")]
    NonOrientable(usize, usize),
    #[error("faces around vertex {vertex} do not form a single fan")]
    NonManifoldVertex { vertex: usize },
    #[error("mesh is not connected")]
    Disconnected,
    #[error(
        "surface is not simply connected (Euler characteristic {euler}, {boundary_loops} boundary loops)"
    )]
    NotSimplyConnected { euler: i64, boundary_loops: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Topology(#[from] TopologyError),
    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },
    #[error("lengths ({0}, {1}, {2}) violate the strict triangle inequality")]
    TriangleInequalityViolated(f64, f64, f64),
    #[error("reference configuration is degenerate at face {face}")]
    ReferenceDegenerate { face: usize },
    #[error("point is infeasible (energy or constraint evaluates to the infinity sentinel)")]
    InfeasiblePoint,
    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),
    #[error("not on the manifold: |Q|_inf = {residual:e} exceeds tolerance {tolerance:e}")]
    NotOnManifold { residual: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
