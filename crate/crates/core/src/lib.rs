//! Numerical workbench for two-dimensional incompressible Boussinesq flows
//! driven by boundary data on a rectangle.
//!
//! The pieces, bottom-up:
//!
//! * [`mesh`]: staggered grid, fields, boundary traces and discrete operators;
//! * [`leray`]: discrete Helmholtz projection and harmonic extension;
//! * [`steady`]: shifted linearised steady problems and their lifting maps;
//! * [`adjoint`]: adjoint solves and transposition (duality) checks;
//! * [`semigroup`]: dense generators, exponentials and fractional powers;
//! * [`evolve`]: time stepping for linear, split and monolithic formulations;
//! * [`bench`]: manufactured solutions, convergence studies, configuration
//!   and output formats used by the `bsq` binary.

// index loops mirror the stencils; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod bench;
pub mod error;
pub mod evolve;
pub mod leray;
pub mod linalg;
pub mod mesh;
pub mod rng;
pub mod semigroup;
pub mod steady;

pub use error::{Error, Result};
pub use mesh::{
    BoundaryTrace, CoupledField, Grid, LinearizationPoint, PhysicalParams, ScalarField,
    VectorField, Wall,
};
