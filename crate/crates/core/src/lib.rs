//! Simulation and verification engine for Gibbsian measures on planar Laguerre
//! tessellations.
//!
//! The crate is organized by task:
//!
//! * [`marks`]: marks, brackets, atomic reference measures and gridded kernels;
//! * [`kinetic`]: the collision operator, kinetic solvers and kernel transforms;
//! * [`forward`]: the one-point marginal and its forward equations;
//! * [`sampler`]: the particle system on a box;
//! * [`tessellation`]: geometry, height functions and Hamilton–Jacobi evolution;
//! * [`harness`]: experiment drivers and statistical tests.

pub mod error;
pub mod fixtures;
pub mod forward;
pub mod io;
pub mod kinetic;
pub mod marks;
pub mod sampler;
pub mod tessellation;
pub mod harness;

pub use error::{Error, Result};
