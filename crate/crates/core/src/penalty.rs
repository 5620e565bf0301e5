//! Penalization of the obstacle constraints: solve
//!
//! ```text
//!   F_h(D²u) = β_ε(u - φ₁) - β_ε(φ₂ - u)
//! ```
//!
//! with `β_ε(s) = -C exp(-s/ε)` and let `ε → 0` by continuation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, NodeField};
use crate::numerics::{semismooth_newton, CsrBuilder, SolverParams};
use crate::obstacle::{linearized_rows, pde_residual, solve_elliptic, DoubleObstacleProblem};
use crate::operators::{apply_operator_field, stencil};

pub const DEFAULT_CLAMP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyFamily {
    c: f64,
    epsilon: f64,
    n_max: f64,
}

impl PenaltyFamily {
    pub fn new(c: f64, epsilon: f64) -> Result<Self> {
        Self::with_clamp(c, epsilon, DEFAULT_CLAMP)
    }

    pub fn with_clamp(c: f64, epsilon: f64, n_max: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && epsilon > 0.0 && epsilon.is_finite() && n_max >= c) {
            return Err(Error::InvalidArgument(format!(
                "penalty family needs C > 0, epsilon > 0 and N_max >= C (got {c}, {epsilon}, {n_max})"
            )));
        }
        Ok(Self { c, epsilon, n_max })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn clamp(&self) -> f64 {
        self.n_max
    }

    /// `β_ε(s)` before clamping.
    pub fn beta_raw(&self, s: f64) -> f64 {
        -self.c * libm::exp(-s / self.epsilon)
    }

    pub fn beta(&self, s: f64) -> f64 {
        self.beta_raw(s).clamp(-self.n_max, self.n_max)
    }

    /// Derivative of [`Self::beta`]; zero where the clamp is active.
    pub fn beta_prime(&self, s: f64) -> f64 {
        let raw = self.beta_raw(s);
        if raw < -self.n_max || raw > self.n_max {
            0.0
        } else {
            -raw / self.epsilon
        }
    }

    /// `G = β_ε(u - φ₁) - β_ε(φ₂ - u)`.
    pub fn penalty_term(&self, u: f64, lower: f64, upper: f64) -> f64 {
        self.beta(u - lower) - self.beta(upper - u)
    }
}

fn interior_sup(field: &NodeField, problem: &DoubleObstacleProblem) -> f64 {
    problem
        .grid()
        .interior()
        .iter()
        .filter_map(|&k| field.get(k))
        .fold(0.0, |m: f64, v| m.max(libm::fabs(v)))
}

/// `max|F_h(D²φ₁)| + max|F_h(D²φ₂)| + 1` over stencil-complete nodes.
pub fn default_c(problem: &DoubleObstacleProblem) -> Result<f64> {
    let a = interior_sup(&apply_operator_field(problem.operator(), problem.lower())?, problem);
    let b = interior_sup(&apply_operator_field(problem.operator(), problem.upper())?, problem);
    Ok(a + b + 1.0)
}

/// The bound reported for `sup|G^ε|` along a sweep with constant `c`:
/// `2C + max_i sup|F_h(D²φ_i)|`.
pub fn uniform_bound(problem: &DoubleObstacleProblem, c: f64) -> Result<f64> {
    let a = interior_sup(&apply_operator_field(problem.operator(), problem.lower())?, problem);
    let b = interior_sup(&apply_operator_field(problem.operator(), problem.upper())?, problem);
    Ok(2.0 * c + a.max(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyReport {
    pub newton_iterations: usize,
    pub linear_sweeps: usize,
    pub residual: f64,
    /// `sup|G^ε|` over interior nodes.
    pub sup_penalty_term: f64,
}

/// Semismooth Newton on the penalized equation starting from `u0`, which must
/// carry the boundary data of `problem`. The result need not respect the
/// obstacles.
pub fn solve_penalized(
    problem: &DoubleObstacleProblem,
    family: &PenaltyFamily,
    u0: &GridFunction,
    params: &SolverParams,
) -> Result<(GridFunction, PenaltyReport)> {
    if !u0.same_grid(problem.lower()) {
        return Err(Error::GridMismatch);
    }
    let grid = problem.grid().clone();
    for k in grid.boundary() {
        let deviation = libm::fabs(u0.value(k) - problem.boundary().value(k));
        if deviation > 1e-12 {
            return Err(Error::BoundaryMismatch { node: k, deviation });
        }
    }
    let lo = problem.lower_bounds();
    let hi = problem.upper_bounds();
    let residual = |x: &[f64]| {
        let full = problem.lift(x);
        let mut r = pde_residual(problem, &full, None);
        for (i, v) in r.iter_mut().enumerate() {
            *v += family.penalty_term(x[i], lo[i], hi[i]);
        }
        r
    };
    let jacobian = |x: &[f64]| {
        let full = problem.lift(x);
        let coeffs = linearized_rows(problem, &full);
        let mut builder = CsrBuilder::new(x.len());
        for (i, &k) in grid.interior().iter().enumerate() {
            for (di, dj, w) in stencil(&coeffs[i], grid.dim(), grid.h()) {
                if w == 0.0 {
                    continue;
                }
                let nb = grid.neighbor(k, di, dj).expect("interior stencils are complete");
                if let Some(j) = grid.unknown_index(nb) {
                    builder.push(j, -w);
                }
            }
            builder.push(i, family.beta_prime(x[i] - lo[i]) + family.beta_prime(hi[i] - x[i]));
            builder.finish_row();
        }
        builder.build()
    };
    let x0 = problem.restrict(u0);
    let s = semismooth_newton(residual, jacobian, &x0, params)?;
    let sup_penalty_term = s
        .x
        .iter()
        .enumerate()
        .fold(0.0_f64, |m, (i, &v)| m.max(libm::fabs(family.penalty_term(v, lo[i], hi[i]))));
    let u = GridFunction::new(grid, problem.lift(&s.x))?;
    Ok((
        u,
        PenaltyReport {
            newton_iterations: s.iterations,
            linear_sweeps: s.linear_sweeps,
            residual: s.residual,
            sup_penalty_term,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepRow {
    pub epsilon: f64,
    pub dist_to_vi: f64,
    pub sup_penalty_term: f64,
    pub newton_iters: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Sorted by decreasing epsilon.
    pub rows: Vec<SweepRow>,
    pub c: f64,
    /// `2C + max_i sup|F_h(D²φ_i)|`.
    pub bound: f64,
    /// Epsilon of the first leg that failed, if any.
    pub failed_at: Option<f64>,
    /// Solution of the last converged leg.
    pub last: Option<GridFunction>,
}

impl SweepResult {
    pub fn max_penalty_term(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.converged)
            .fold(0.0, |m: f64, r| m.max(r.sup_penalty_term))
    }

    pub fn bound_holds(&self) -> bool {
        self.max_penalty_term() <= self.bound
    }

    /// `sup|G|` at the smallest ε is at most `1.1×` the value at the largest
    /// ε plus `1e-6`.
    pub fn penalty_term_stable(&self) -> bool {
        let converged: Vec<&SweepRow> = self.rows.iter().filter(|r| r.converged).collect();
        match (converged.first(), converged.last()) {
            (Some(first), Some(last)) => last.sup_penalty_term <= 1.1 * first.sup_penalty_term + 1e-6,
            _ => false,
        }
    }

    /// Strictly decreasing distance to the VI solution over converged legs.
    pub fn distances_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].dist_to_vi < w[0].dist_to_vi)
    }

    pub fn completed(&self) -> bool {
        self.failed_at.is_none()
    }
}

/// Warm-started ε-continuation. `c` defaults to [`default_c`]; the first leg
/// starts from `seed`, or from the VI solution when absent.
pub fn penalty_sweep(
    problem: &DoubleObstacleProblem,
    eps_list: &[f64],
    c: Option<f64>,
    seed: Option<&GridFunction>,
    params: &SolverParams,
) -> Result<SweepResult> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("epsilon list must be nonempty and positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon list must be strictly decreasing".into()));
    }
    let c = match c {
        Some(c) => c,
        None => default_c(problem)?,
    };
    let bound = uniform_bound(problem, c)?;
    let (vi, _) = solve_elliptic(problem, params)?;
    let mut current = seed.cloned().unwrap_or_else(|| vi.clone());
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut failed_at = None;
    let mut last = None;
    for &epsilon in eps_list {
        let family = PenaltyFamily::new(c, epsilon)?;
        match solve_penalized(problem, &family, &current, params) {
            Ok((u, report)) => {
                rows.push(SweepRow {
                    epsilon,
                    dist_to_vi: u.sup_distance(&vi)?,
                    sup_penalty_term: report.sup_penalty_term,
                    newton_iters: report.newton_iterations,
                    converged: true,
                });
                current = u.clone();
                last = Some(u);
            }
            Err(err) => {
                log::warn!("penalty sweep leg epsilon = {epsilon} failed: {err}");
                rows.push(SweepRow {
                    epsilon,
                    dist_to_vi: f64::NAN,
                    sup_penalty_term: f64::NAN,
                    newton_iters: 0,
                    converged: false,
                });
                failed_at = Some(epsilon);
                break;
            }
        }
    }
    Ok(SweepResult { rows, c, bound, failed_at, last })
}

/// Geometric schedule `start, start/ratio, ...` down to `end` inclusive.
pub fn epsilon_schedule(start: f64, end: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > 0.0 && end <= start && ratio > 1.0) {
        return Err(Error::InvalidArgument("need start >= end > 0 and ratio > 1".into()));
    }
    let mut out = vec![start];
    let mut e = start;
    while e / ratio >= end * (1.0 - 1e-9) {
        e /= ratio;
        out.push(e);
    }
    Ok(out)
}
