//! Sparse linear algebra and the iterative solvers shared by the obstacle
//! and penalty solvers.
//!
//! Sign convention: assembled matrices represent `-F(D²·)` (plus any
//! reaction term), so their diagonals are positive and, for monotone
//! stencils, off-diagonals are nonpositive.

mod newton;
mod policy;
mod sor;
mod sparse;

pub use newton::{semismooth_newton, NewtonSolution};
pub use policy::{policy_iteration, policy_iteration_from, PolicySolution};
pub use sor::{
    clipped_residual, projected_sor, projected_sor_from, solve_linear, solve_linear_from,
    LinearSolution,
};
pub use sparse::{CsrBuilder, CsrMatrix};

use crate::error::{Error, Result};

/// Encodes an absent bound, so single- and double-obstacle problems share
/// one code path.
pub const INFINITE_BOUND: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Damping {
    None,
    Halving { max_halvings: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverParams {
    /// Sup-norm residual target for linear solves, relative to `1 + ||b||`.
    pub tol_linear: f64,
    /// Sup-norm target for complementarity and Newton residuals.
    pub tol_nonlinear: f64,
    /// Sweep cap for (projected) SOR; `None` scales with the unknown count.
    pub max_iter_linear: Option<usize>,
    pub max_iter_newton: usize,
    pub relaxation_omega: f64,
    pub newton_damping: Damping,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol_linear: 1e-10,
            tol_nonlinear: 1e-9,
            max_iter_linear: None,
            max_iter_newton: 100,
            relaxation_omega: 1.5,
            newton_damping: Damping::Halving { max_halvings: 30 },
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_linear > 0.0 && self.tol_nonlinear > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.relaxation_omega > 0.0 && self.relaxation_omega < 2.0) {
            return Err(Error::InvalidArgument("relaxation omega must lie in (0, 2)".into()));
        }
        if self.max_iter_newton == 0 || self.max_iter_linear == Some(0) {
            return Err(Error::InvalidArgument("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// SOR sweep cap for a system with `unknowns` rows.
    pub fn linear_cap(&self, unknowns: usize) -> usize {
        // Lexicographic SOR at omega = 1.5 needs O(n_axis²) sweeps on the
        // Dirichlet Laplacian, so the cap grows with the unknown count.
        self.max_iter_linear.unwrap_or_else(|| (500 * unknowns).max(10_000))
    }
}

#[inline]
pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}
