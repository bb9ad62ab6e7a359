//! Convex-constrained least squares projections and the risk theory around
//! them: exact projection operators for a family of constraint sets,
//! polyhedral conic geometry (tangent cones, faces, generators), Monte Carlo
//! statistical-dimension estimation, closed-form low/high-noise risk limits,
//! and a simulation lab for normalized misspecified and excess risk curves.
//!
//! The `conerisk` binary exposes the same functionality as subcommands
//! (`statdim`, `limits`, `sweep`, `table1`, `verify`).

pub mod error;
pub mod geometry;
pub mod limits;
pub mod numerics;
pub mod risklab;
pub mod sets;
pub mod statdim;
pub mod verify;

pub use error::{Error, Result};
