use alloc::boxed::Box;
use alloc::string::String;

use crate::expr::ExprError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("radius {radius} is below the resolution floor {floor}")]
    ResolutionFloor { radius: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("stencil at node {node} leaves the domain")]
    StencilOutsideDomain { node: usize },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero or negative diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("infeasible bounds at index {index}: lo > hi")]
    InfeasibleBounds { index: usize },
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("Newton diverged at iteration {iteration}: damping exhausted (residual {residual:e})")]
    NewtonDivergence { iteration: usize, residual: f64 },
    #[error("obstacles are not separated at node {node} (phi2 - phi1 = {gap})")]
    ObstaclesNotSeparated { node: usize, gap: f64 },
    #[error("boundary data incompatible with the obstacles at node {node}")]
    IncompatibleBoundary { node: usize },
    #[error("boundary values differ from the data at node {node} by {deviation:e}")]
    BoundaryMismatch { node: usize, deviation: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("incompatible rescaling: {0}")]
    IncompatibleRescaling(String),
    #[error("node {node} is not a contact node")]
    NotAContactPoint { node: usize },
    #[error("no admissible radius in the probe window")]
    EmptyRadiiWindow,
    #[error("no admissible node pairs")]
    NoAdmissiblePairs,
    #[error("time step ending at t = {t} failed: {source}")]
    TimeStep { t: f64, source: Box<Error> },
    #[error(transparent)]
    Expr(#[from] ExprError),
}
