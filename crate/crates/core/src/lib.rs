//! Staggered discontinuous Galerkin discretization of the unsteady
//! Darcy–Forchheimer–Brinkman equations on polygonal meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: primal polygons, the simplicial submesh and oriented edges
//! - [`polybasis`]: quadrature and local polynomial bases
//! - [`spaces`]: the four staggered spaces and their interpolants
//! - [`forms`]: assembled bilinear forms and load vectors
//! - [`solver`]: Picard-linearized time stepping with a monolithic saddle-point solve
//! - [`verify`]: manufactured solution, error norms and observed orders
//! - [`cli`]: run configuration and table output for the `solve` binary

pub mod cli;
pub mod error;
pub mod forms;
pub mod mesh;
pub mod polybasis;
pub mod solver;
pub mod sparse;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::{
    build_rectangle_mesh, build_staggered, mesh_quality, read_polygon_mesh, InteriorPointRule,
    PrimalMesh, Rectangle, StaggeredMesh,
};
pub use spaces::{build_space, DofSpace, FieldCoefficients, SpaceKind, SpaceSet};
