//! Backward Euler for the parabolic double obstacle problem
//!
//! ```text
//!   φ₁ ≤ u ≤ φ₂,  F(D²u) - ∂ₜu ≤ 0 on {u < φ₂},  F(D²u) - ∂ₜu ≥ 0 on {u > φ₁}
//! ```
//!
//! with time-independent obstacles. Each step is an elliptic obstacle solve
//! with reaction term `(u - u_prev)/dt`.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::grid::{Grid, GridFunction};
use crate::numerics::SolverParams;
use crate::obstacle::{solve_obstacle, DoubleObstacleProblem, Reaction, SolveReport};
use crate::operators::EllipticOperator;

/// Lateral boundary values.
#[derive(Clone, Debug, PartialEq)]
pub enum LateralData {
    Static(GridFunction),
    /// Expression in `x`, `y`, `t`, sampled at the boundary data points.
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicProblem {
    operator: EllipticOperator,
    lower: GridFunction,
    upper: GridFunction,
    lateral: LateralData,
    initial: GridFunction,
    t_start: f64,
    t_end: f64,
    dt: f64,
    initial_projection: f64,
}

impl ParabolicProblem {
    /// Time interval must lie in `[-1, 1]`. An initial slice outside the
    /// obstacles is projected onto them; [`Self::initial_projection`] reports
    /// how far it moved.
    pub fn new(
        operator: EllipticOperator,
        lower: GridFunction,
        upper: GridFunction,
        lateral: LateralData,
        initial: GridFunction,
        (t_start, t_end): (f64, f64),
        dt: f64,
    ) -> Result<Self> {
        if !(-1.0 <= t_start && t_start < t_end && t_end <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "time interval [{t_start}, {t_end}] must be a nonempty subinterval of [-1, 1]"
            )));
        }
        if !(dt > 0.0 && dt <= t_end - t_start) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must lie in (0, t_end - t_start]")));
        }
        if !initial.same_grid(&lower) {
            return Err(Error::GridMismatch);
        }
        if let LateralData::Static(g) = &lateral {
            if !g.same_grid(&lower) {
                return Err(Error::GridMismatch);
            }
        }
        let mut problem = Self {
            operator,
            lower,
            upper,
            lateral,
            initial: initial.clone(),
            t_start,
            t_end,
            dt,
            initial_projection: 0.0,
        };
        // validates obstacles and lateral data at t_start
        let elliptic = problem.elliptic_at(t_start)?;
        let grid = problem.grid().clone();
        for k in grid.boundary() {
            let deviation = libm::fabs(initial.value(k) - elliptic.boundary().value(k));
            if deviation > 1e-12 {
                return Err(Error::BoundaryMismatch { node: k, deviation });
            }
        }
        let projected = initial.zip_map(&problem.lower, |u, lo| u.max(lo))?;
        let projected = projected.zip_map(&problem.upper, |u, hi| u.min(hi))?;
        problem.initial_projection = projected.sup_distance(&initial)?;
        if problem.initial_projection > 0.0 {
            log::info!("initial slice projected onto the obstacles (moved by {})", problem.initial_projection);
        }
        problem.initial = projected;
        Ok(problem)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.lower.grid()
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.operator
    }

    pub fn lower(&self) -> &GridFunction {
        &self.lower
    }

    pub fn upper(&self) -> &GridFunction {
        &self.upper
    }

    pub fn initial(&self) -> &GridFunction {
        &self.initial
    }

    pub fn initial_projection(&self) -> f64 {
        self.initial_projection
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_initial(&self, initial: GridFunction) -> Result<Self> {
        Self::new(
            self.operator.clone(),
            self.lower.clone(),
            self.upper.clone(),
            self.lateral.clone(),
            initial,
            (self.t_start, self.t_end),
            self.dt,
        )
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let mut p = self.clone();
        if !(dt > 0.0 && dt <= self.t_end - self.t_start) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must lie in (0, t_end - t_start]")));
        }
        p.dt = dt;
        Ok(p)
    }

    /// Lateral data at time `t` as a grid function (interior values are the
    /// data extended inward and are not used by the solver).
    pub fn lateral_at(&self, t: f64) -> Result<GridFunction> {
        match &self.lateral {
            LateralData::Static(g) => Ok(g.clone()),
            LateralData::Expr(e) => {
                let grid = self.grid().clone();
                let values = (0..grid.len())
                    .map(|k| {
                        let p = grid.data_point(k);
                        e.eval(&Env::space_time(p[0], p[1], t))
                    })
                    .collect::<core::result::Result<Vec<f64>, _>>()?;
                GridFunction::new(grid, values)
            }
        }
    }

    /// The elliptic problem solved at time `t` (same obstacles, lateral data
    /// at `t`).
    pub fn elliptic_at(&self, t: f64) -> Result<DoubleObstacleProblem> {
        DoubleObstacleProblem::new(self.operator.clone(), self.lower.clone(), self.upper.clone(), self.lateral_at(t)?)
    }

    /// Time levels `t_start, t_start + dt, ..., t_end`; the last step is
    /// shortened to land on `t_end`.
    pub fn time_levels(&self) -> Vec<f64> {
        let span = self.t_end - self.t_start;
        let steps = libm::ceil(span / self.dt - 1e-9).max(1.0) as usize;
        let mut times: Vec<f64> = (0..steps).map(|k| self.t_start + k as f64 * self.dt).collect();
        times.push(self.t_end);
        times
    }
}

/// One backward Euler step from `(t_prev, u_prev)` to `t_next`. Any
/// `u_prev` on the grid is accepted; only its interior values enter.
pub fn step_implicit(
    u_prev: &GridFunction,
    t_prev: f64,
    t_next: f64,
    problem: &ParabolicProblem,
    params: &SolverParams,
) -> Result<(GridFunction, SolveReport)> {
    let wrap = |e: Error| Error::TimeStep { t: t_next, source: Box::new(e) };
    if !u_prev.same_grid(&problem.lower) {
        return Err(Error::GridMismatch);
    }
    let dt = t_next - t_prev;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {t_prev} -> {t_next} is not forward")));
    }
    let elliptic = problem.elliptic_at(t_next).map_err(wrap)?;
    let reaction = Reaction { coeff: 1.0 / dt, source: elliptic.restrict(u_prev) };
    solve_obstacle(&elliptic, Some(&reaction), Some(u_prev), params).map_err(wrap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub slices: Vec<GridFunction>,
    /// One report per step (slice count minus one when complete).
    pub reports: Vec<SolveReport>,
    /// Set when a step failed; the slices computed before it are kept.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> &GridFunction {
        self.slices.last().expect("trajectories hold the initial slice")
    }

    /// Index of the slice whose time is nearest to `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if libm::fabs(s - t) < libm::fabs(self.times[best] - t) {
                best = i;
            }
        }
        best
    }
}

pub fn solve_parabolic(problem: &ParabolicProblem, params: &SolverParams) -> Result<Trajectory> {
    solve_parabolic_steps(problem, usize::MAX, params)
}

/// Like [`solve_parabolic`] but stops after at most `max_steps` steps.
pub fn solve_parabolic_steps(problem: &ParabolicProblem, max_steps: usize, params: &SolverParams) -> Result<Trajectory> {
    params.validate()?;
    let levels = problem.time_levels();
    let mut traj = Trajectory {
        times: Vec::with_capacity(levels.len()),
        slices: Vec::with_capacity(levels.len()),
        reports: Vec::new(),
        failure: None,
    };
    traj.times.push(levels[0]);
    traj.slices.push(problem.initial.clone());
    for w in levels.windows(2).take(max_steps) {
        match step_implicit(traj.last(), w[0], w[1], problem, params) {
            Ok((u, report)) => {
                traj.times.push(w[1]);
                traj.slices.push(u);
                traj.reports.push(report);
            }
            Err(e) => {
                log::warn!("parabolic run stopped: {e}");
                traj.failure = Some(e);
                break;
            }
        }
    }
    Ok(traj)
}

/// `sup|u(t_end) - u_ell|`.
pub fn steady_state_gap(traj: &Trajectory, u_ell: &GridFunction) -> Result<f64> {
    traj.last().sup_distance(u_ell)
}

/// Runs two trajectories from ordered initial slices `a ≤ b` and returns
/// `max(u_a - u_b)` over all slices and nodes, clipped at zero.
pub fn comparison_probe(
    problem: &ParabolicProblem,
    initial_a: &GridFunction,
    initial_b: &GridFunction,
    params: &SolverParams,
) -> Result<f64> {
    if initial_a.zip_map(initial_b, |a, b| a - b)?.values().iter().any(|&d| d > 0.0) {
        return Err(Error::PreconditionViolated("initial slices must be ordered".into()));
    }
    let ta = solve_parabolic(&problem.with_initial(initial_a.clone())?, params)?;
    let tb = solve_parabolic(&problem.with_initial(initial_b.clone())?, params)?;
    for t in [&ta, &tb] {
        if let Some(e) = &t.failure {
            return Err(e.clone());
        }
    }
    let mut worst = 0.0_f64;
    for (a, b) in ta.slices.iter().zip(&tb.slices) {
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max(x - y);
        }
    }
    Ok(worst)
}
