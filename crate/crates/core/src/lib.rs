//! Algebraic flux correction for steady convection-diffusion-reaction
//! problems discretized with linear finite elements on triangles.
//!
//! The crate provides three discretizations of
//! `-eps * lap(u) + v . grad(u) + c u = f` on the unit square:
//!
//! - plain Galerkin,
//! - monolithic convex limiting (MC), which stabilizes the convective term
//!   through limited bar states,
//! - the well-balanced variant (WMC), which additionally moves the source
//!   term into the bar states through limited balancing fluxes so that
//!   linear steady states of constant-coefficient problems are reproduced
//!   exactly.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line driver live in the companion `afc` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod benchmarks;
pub mod error;
pub mod limiter;
pub mod linsolve;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble, Operators};
pub use error::{Error, Result};
pub use mesh::{classify_and_order, GridId, Mesh};
pub use problem::{BoundaryRule, ProblemSpec};
pub use solver::{
    solve, Discretization, InitialGuess, Iteration, Limiter, SolveOptions, SolveReport, WbVariant,
};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    libm::sqrt(dot(a, a))
}
