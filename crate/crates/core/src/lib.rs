//! Cell-centered finite volume machinery for the heat equation with
//! multiplicative scalar Brownian forcing and homogeneous Neumann walls.
//!
//! The crate is split along the natural seams of the method:
//!
//! * [`mesh`] -- admissible two-point-flux meshes (cells, interior edges,
//!   transmissibility geometry) and their regularity numbers,
//! * [`field`] -- piecewise-constant functions on a mesh, discrete norms,
//!   projections of point data, and exact cross-grid L² errors,
//! * [`operators`] -- the TPFA stiffness operator, SPD solves of the implicit
//!   step system, and the elliptic (mean-matching) projection,
//! * [`sde`] -- reproducible Brownian increments, block aggregation across
//!   time resolutions, and the semi-implicit Euler stepper,
//! * [`functions`] -- the built-in initial data and noise coefficients.
//!
//! Everything here is pure computation over `alloc` containers; the crate
//! builds without `std` when the `libm` feature supplies float math. File
//! formats, CLI, and parallel experiment drivers live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("fvshe-core needs either the `std` or the `libm` feature for float math");

extern crate alloc;

mod error;
pub mod field;
pub mod functions;
pub(crate) mod math;
pub mod mesh;
pub mod operators;
pub mod sde;

pub use error::{Error, Result};
pub use field::{
    cell_average_project, centered_project, cross_mesh_l2_error, discrete_h1_seminorm,
    discrete_l2_norm, mean_value, Field,
};
pub use functions::{InitialData, NoiseModel};
pub use mesh::{
    build_grid_mesh, build_rect_mesh, mesh_regularity, validate_mesh, BoundingBox, GridShape,
    InteriorEdge, Mesh, MeshRegularity,
};
pub use operators::{
    assemble_stiffness, elliptic_project, solve_spd, SolverConfig, SolverMethod, SparseOperator,
};
pub use sde::{
    aggregate_increments, fvs_step, sample_increments, simulate, simulate_observed,
    BrownianIncrements, SeedProvenance,
};
