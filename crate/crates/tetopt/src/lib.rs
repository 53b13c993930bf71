//! Tetrahedral mesh optimization around a convex per-vertex energy.
//!
//! The library repositions each interior vertex of a tetrahedral mesh by
//! minimizing a weighted sum of squared cell volumes over the vertex's
//! one-ring — a convex quadratic program solved with Newton steps and a
//! feasibility-preserving line search — and interleaves those sweeps with
//! local remeshing (2-3/3-2/n-m flips, edge split and collapse). A constant
//! weighting drives tet volumes toward uniformity; an inverse-opposite-area
//! weighting then equalizes heights and with them the dihedral angles.
//!
//! The geometric and energy kernels are generic over the scalar type; the
//! mesh containers, pipeline and I/O are fixed to `f64` via the aliases
//! below.

pub mod cli;
pub mod delaunay;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod predicates;
pub mod quality;
pub mod remesh;
pub mod samples;
pub mod scalar;
pub mod seedgen;
pub mod solver;

/// Concrete scalar used by the mesh layers.
pub type Scalar = f64;
/// 3D point at the mesh scalar.
pub type Point3 = geometry::Point3<f64>;
/// 3D vector at the mesh scalar.
pub type Vec3 = geometry::Vec3<f64>;
/// 3x3 matrix at the mesh scalar.
pub type Mat3 = geometry::Mat3<f64>;
/// Cavity energy state at the mesh scalar.
pub type Cavity = energy::CavityState<f64>;

pub use error::Error;
pub use mesh::{EdgeKey, OneRing, TetMesh, VertexKind};
