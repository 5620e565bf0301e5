//! Discrete solvers and regularity diagnostics for elliptic and parabolic
//! double obstacle problems
//!
//! ```text
//!   φ₁ ≤ u ≤ φ₂,   F(D²u) ≤ 0 on {u < φ₂},   F(D²u) ≥ 0 on {u > φ₁}
//! ```
//!
//! where `F` is a fully nonlinear uniformly elliptic operator (Laplace, Pucci
//! extremal operators, or a Bellman family). The crate is `no_std` and only
//! needs `alloc`; file formats and the command line live in the `obstacle`
//! crate.
//!
//! Module map:
//!
//! - [`grid`]: uniform Cartesian grids on `[-1,1]^d` or the unit disc, grid
//!   functions, balls and moduli of continuity.
//! - [`expr`]: the arithmetic expression language used for obstacle and
//!   boundary data.
//! - [`operators`]: the operator catalog, discrete Hessians and ellipticity
//!   sampling.
//! - [`numerics`]: CSR matrices, (projected) SOR, semismooth Newton and
//!   Howard policy iteration.
//! - [`obstacle`]: the discrete complementarity solver for the elliptic
//!   problem.
//! - [`penalty`]: the exponential penalization family and ε-continuation.
//! - [`parabolic`]: backward Euler time stepping with time-independent
//!   obstacles.
//! - [`regularity`]: contact sets, growth profiles, Hölder seminorms and
//!   weak-L^ε checks.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod expr;
pub mod grid;
pub mod numerics;
pub mod obstacle;
pub mod operators;
pub mod parabolic;
pub mod penalty;
pub mod regularity;

pub use error::{Error, Result};
pub use grid::{DomainKind, Grid, GridFunction, NodeClass, NodeField, Point};
pub use numerics::SolverParams;
pub use obstacle::{DoubleObstacleProblem, SolveReport};
pub use operators::{EllipticOperator, SymMatrix};
