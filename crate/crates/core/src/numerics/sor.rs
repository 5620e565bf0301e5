use alloc::vec;
use alloc::vec::Vec;

use super::{sup_norm, CsrMatrix, SolverParams};
use crate::error::{Error, Result};

/// Residual checks happen every this many sweeps.
const CHECK_EVERY: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub sweeps: usize,
    /// Sup norm of the (clipped, for projected solves) residual at exit.
    pub residual: f64,
}

fn check_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    (0..a.n())
        .map(|i| {
            let d = a.diag(i);
            // NaN falls through to the error
            #[allow(clippy::double_comparisons)]
            if d > 0.0 || d < 0.0 {
                Ok(d)
            } else {
                Err(Error::ZeroDiagonal { row: i })
            }
        })
        .collect()
}

/// Solves `Ax = b` by lexicographic SOR sweeps starting from zero.
pub fn solve_linear(a: &CsrMatrix, b: &[f64], params: &SolverParams) -> Result<LinearSolution> {
    solve_linear_from(a, b, &vec![0.0; a.n()], params)
}

pub fn solve_linear_from(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    params: &SolverParams,
) -> Result<LinearSolution> {
    params.validate()?;
    let diag = check_diagonal(a)?;
    let omega = params.relaxation_omega;
    let target = params.tol_linear * (1.0 + sup_norm(b));
    let cap = params.linear_cap(a.n());
    let mut x = x0.to_vec();
    let mut residual = sup_norm(&a.residual(&x, b));
    let mut sweeps = 0;
    while residual > target {
        if sweeps >= cap {
            return Err(Error::NotConverged { method: "SOR", iterations: sweeps, residual });
        }
        for _ in 0..CHECK_EVERY {
            for i in 0..a.n() {
                let r = b[i] - a.row_dot(i, &x);
                x[i] += omega * r / diag[i];
            }
        }
        sweeps += CHECK_EVERY;
        residual = sup_norm(&a.residual(&x, b));
        if !residual.is_finite() {
            return Err(Error::NotConverged { method: "SOR", iterations: sweeps, residual });
        }
    }
    Ok(LinearSolution { x, sweeps, residual })
}

/// Complementarity residual of `lo ≤ x ≤ hi` against `r = Ax - b`:
/// `max(min(r_i, x_i - lo_i), x_i - hi_i)`, i.e. the median of
/// `(x_i - hi_i, r_i, x_i - lo_i)`. With infinite bounds it is `r_i`.
pub fn clipped_residual(a: &CsrMatrix, b: &[f64], lo: &[f64], hi: &[f64], x: &[f64]) -> Vec<f64> {
    (0..a.n())
        .map(|i| {
            let r = a.row_dot(i, x) - b[i];
            r.min(x[i] - lo[i]).max(x[i] - hi[i])
        })
        .collect()
}

/// Projected SOR for the box-constrained linear complementarity problem
/// `lo ≤ x ≤ hi` with `Ax - b ≥ 0` where `x = lo`, `≤ 0` where `x = hi` and
/// `= 0` strictly between.
pub fn projected_sor(
    a: &CsrMatrix,
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    params: &SolverParams,
) -> Result<LinearSolution> {
    projected_sor_from(a, b, lo, hi, &vec![0.0; a.n()], params)
}

pub fn projected_sor_from(
    a: &CsrMatrix,
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    params: &SolverParams,
) -> Result<LinearSolution> {
    params.validate()?;
    if let Some(index) = (0..a.n()).find(|&i| lo[i] > hi[i]) {
        return Err(Error::InfeasibleBounds { index });
    }
    let diag = check_diagonal(a)?;
    if let Some(row) = a.first_non_m_row() {
        log::warn!("projected SOR: row {row} is not M-matrix-like; convergence is not guaranteed");
    }
    let omega = params.relaxation_omega;
    let cap = params.linear_cap(a.n());
    let mut x: Vec<f64> = (0..a.n()).map(|i| x0[i].clamp(lo[i], hi[i])).collect();
    let mut residual = sup_norm(&clipped_residual(a, b, lo, hi, &x));
    let mut sweeps = 0;
    while residual > params.tol_nonlinear {
        if sweeps >= cap {
            return Err(Error::NotConverged { method: "projected SOR", iterations: sweeps, residual });
        }
        for _ in 0..CHECK_EVERY {
            for i in 0..a.n() {
                let r = b[i] - a.row_dot(i, &x);
                x[i] = (x[i] + omega * r / diag[i]).clamp(lo[i], hi[i]);
            }
        }
        sweeps += CHECK_EVERY;
        residual = sup_norm(&clipped_residual(a, b, lo, hi, &x));
        if !residual.is_finite() {
            return Err(Error::NotConverged { method: "projected SOR", iterations: sweeps, residual });
        }
    }
    Ok(LinearSolution { x, sweeps, residual })
}
