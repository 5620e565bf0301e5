//! The elliptic double obstacle problem as a discrete complementarity system.
//!
//! At interior nodes the discrete solution satisfies
//!
//! ```text
//!   max(min(F_h(D²u) - c(u - f), φ₂ - u), φ₁ - u) = 0
//! ```
//!
//! which encodes `u = φ₁ ⇒ F_h ≤ 0`, `u = φ₂ ⇒ F_h ≥ 0` and `F_h = 0` strictly
//! between the obstacles. The reaction term `c(u - f)` is zero for elliptic
//! solves and carries the backward Euler time derivative in [`crate::parabolic`].

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, NodeField};
use crate::numerics::{
    policy_iteration_from, projected_sor_from, semismooth_newton, CsrBuilder, CsrMatrix,
    SolverParams,
};
use crate::operators::{hessian_at, rescale_operator, stencil, EllipticOperator, OperatorClass, SymMatrix};

/// Data of the problem `(φ₁, φ₂, F, g)` on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleObstacleProblem {
    operator: EllipticOperator,
    lower: GridFunction,
    upper: GridFunction,
    boundary: GridFunction,
    separation: f64,
}

impl DoubleObstacleProblem {
    /// Checks `φ₁ < φ₂` everywhere and `φ₁ ≤ g ≤ φ₂` on boundary nodes. Only
    /// the boundary values of `boundary` are used.
    pub fn new(
        operator: EllipticOperator,
        lower: GridFunction,
        upper: GridFunction,
        boundary: GridFunction,
    ) -> Result<Self> {
        if !lower.same_grid(&upper) || !lower.same_grid(&boundary) {
            return Err(Error::GridMismatch);
        }
        let grid = lower.grid().clone();
        if let Some(d) = operator.dim() {
            if d != grid.dim() {
                return Err(Error::DimensionMismatch { expected: grid.dim(), found: d });
            }
        }
        let mut separation = f64::INFINITY;
        for k in 0..grid.len() {
            let gap = upper.value(k) - lower.value(k);
            if !(gap > 0.0) {
                return Err(Error::ObstaclesNotSeparated { node: k, gap });
            }
            separation = separation.min(gap);
        }
        for k in grid.boundary() {
            let g = boundary.value(k);
            if g < lower.value(k) || g > upper.value(k) {
                return Err(Error::IncompatibleBoundary { node: k });
            }
        }
        Ok(Self { operator, lower, upper, boundary, separation })
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

    pub fn boundary(&self) -> &GridFunction {
        &self.boundary
    }

    /// `min(φ₂ - φ₁)` over all nodes.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn with_boundary(&self, boundary: GridFunction) -> Result<Self> {
        Self::new(self.operator.clone(), self.lower.clone(), self.upper.clone(), boundary)
    }

    pub fn with_obstacles(&self, lower: GridFunction, upper: GridFunction) -> Result<Self> {
        Self::new(self.operator.clone(), lower, upper, self.boundary.clone())
    }

    pub fn with_operator(&self, operator: EllipticOperator) -> Result<Self> {
        Self::new(operator, self.lower.clone(), self.upper.clone(), self.boundary.clone())
    }

    pub(crate) fn lower_bounds(&self) -> Vec<f64> {
        self.grid().interior().iter().map(|&k| self.lower.value(k)).collect()
    }

    pub(crate) fn upper_bounds(&self) -> Vec<f64> {
        self.grid().interior().iter().map(|&k| self.upper.value(k)).collect()
    }

    /// Full nodal values: `g` on the boundary, `unknowns` in the interior.
    pub(crate) fn lift(&self, unknowns: &[f64]) -> Vec<f64> {
        let mut full = self.boundary.values().to_vec();
        for (i, &k) in self.grid().interior().iter().enumerate() {
            full[k] = unknowns[i];
        }
        full
    }

    pub(crate) fn restrict(&self, u: &GridFunction) -> Vec<f64> {
        self.grid().interior().iter().map(|&k| u.value(k)).collect()
    }

    fn check_boundary(&self, u: &GridFunction) -> Result<()> {
        if !u.same_grid(&self.lower) {
            return Err(Error::GridMismatch);
        }
        for k in self.grid().boundary() {
            let deviation = libm::fabs(u.value(k) - self.boundary.value(k));
            if deviation > 1e-12 {
                return Err(Error::BoundaryMismatch { node: k, deviation });
            }
        }
        Ok(())
    }
}

/// Zeroth-order term `c(u - f)` subtracted from `F_h(D²u)`; `source` is
/// indexed like the interior unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub coeff: f64,
    pub source: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveMethod {
    ProjectedSor,
    PolicyIteration,
    SemismoothNewton,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    pub linear_sweeps: usize,
    pub final_residual: f64,
    pub contact_fraction_lower: f64,
    pub contact_fraction_upper: f64,
    /// Filled in by callers that own a clock; zero otherwise.
    #[cfg_attr(feature = "serde", serde(rename = "wall_time_s"))]
    pub wall_time_s: f64,
    /// Set for schemes without a monotonicity guarantee (2D Pucci stencils).
    pub experimental: bool,
}

/// Default contact tolerance `max(10·tol_nonlinear, h²)`.
pub fn default_contact_tolerance(grid: &Grid, params: &SolverParams) -> f64 {
    (10.0 * params.tol_nonlinear).max(grid.h() * grid.h())
}

/// Assembles `(-tr(A_k D²_h) + c I) u = b` over the interior unknowns with the
/// boundary values of `full` moved to the right-hand side.
pub(crate) fn assemble_linear(
    grid: &Grid,
    coeff: impl Fn(usize) -> SymMatrix,
    reaction: Option<&Reaction>,
    full: &[f64],
) -> (CsrMatrix, Vec<f64>) {
    let interior = grid.interior();
    let mut builder = CsrBuilder::new(interior.len());
    let mut rhs = vec![0.0; interior.len()];
    for (i, &k) in interior.iter().enumerate() {
        for (di, dj, w) in stencil(&coeff(i), grid.dim(), grid.h()) {
            if w == 0.0 {
                continue;
            }
            let nb = grid.neighbor(k, di, dj).expect("interior stencils are complete");
            match grid.unknown_index(nb) {
                Some(j) => builder.push(j, -w),
                None => rhs[i] += w * full[nb],
            }
        }
        if let Some(r) = reaction {
            builder.push(i, r.coeff);
            rhs[i] += r.coeff * r.source[i];
        }
        builder.finish_row();
    }
    (builder.build(), rhs)
}

/// Jacobian rows of `u ↦ -F_h(D²u) + c u` at the given full state, one
/// linearization per interior node.
pub(crate) fn linearized_rows(problem: &DoubleObstacleProblem, full: &[f64]) -> Vec<SymMatrix> {
    let grid = problem.grid();
    grid.interior()
        .iter()
        .map(|&k| {
            let m = hessian_at(grid, full, k).expect("interior stencils are complete");
            problem.operator.linearize(&m).expect("dimension checked at construction").1
        })
        .collect()
}

/// `-F_h(D²u) + c(u - f)` at every interior node of the full state.
pub(crate) fn pde_residual(problem: &DoubleObstacleProblem, full: &[f64], reaction: Option<&Reaction>) -> Vec<f64> {
    let grid = problem.grid();
    grid.interior()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let m = hessian_at(grid, full, k).expect("interior stencils are complete");
            let f = problem.operator.eval(&m).expect("dimension checked at construction");
            match reaction {
                Some(r) => -f + r.coeff * (full[k] - r.source[i]),
                None => -f,
            }
        })
        .collect()
}

/// `max(min(F_h(D²u), φ₂ - u), φ₁ - u)` at interior nodes; zero everywhere
/// characterizes a discrete solution.
pub fn complementarity_residual(u: &GridFunction, problem: &DoubleObstacleProblem) -> Result<NodeField> {
    complementarity_residual_with(u, problem, None)
}

pub fn complementarity_residual_with(
    u: &GridFunction,
    problem: &DoubleObstacleProblem,
    reaction: Option<&Reaction>,
) -> Result<NodeField> {
    problem.check_boundary(u)?;
    let grid = problem.grid();
    let pde = pde_residual(problem, u.values(), reaction);
    let mut values = vec![None; grid.len()];
    for (i, &k) in grid.interior().iter().enumerate() {
        let v = u.value(k);
        values[k] = Some((-pde[i]).min(problem.upper.value(k) - v).max(problem.lower.value(k) - v));
    }
    Ok(NodeField::new(grid.clone(), values))
}

pub fn solve_elliptic(problem: &DoubleObstacleProblem, params: &SolverParams) -> Result<(GridFunction, SolveReport)> {
    solve_obstacle(problem, None, None, params)
}

/// Solves the complementarity system, optionally with a reaction term and an
/// initial guess. Laplace problems use projected SOR, Bellman families use
/// policy iteration and everything else semismooth Newton started from a
/// projected SOR solve of the isotropic relaxation `((λ+Λ)/2) Δ`.
pub fn solve_obstacle(
    problem: &DoubleObstacleProblem,
    reaction: Option<&Reaction>,
    initial: Option<&GridFunction>,
    params: &SolverParams,
) -> Result<(GridFunction, SolveReport)> {
    params.validate()?;
    // Inner solvers aim below the tolerance so the independently recomputed
    // residual stays within it.
    let outer = params;
    let inner = SolverParams { tol_nonlinear: 0.5 * params.tol_nonlinear, ..*params };
    let params = &inner;
    let grid = problem.grid().clone();
    let lo = problem.lower_bounds();
    let hi = problem.upper_bounds();
    let full_boundary = problem.boundary.values();
    let x0: Vec<f64> = match initial {
        Some(u) => {
            if !u.same_grid(&problem.lower) {
                return Err(Error::GridMismatch);
            }
            problem.restrict(u)
        }
        None => vec![0.0; lo.len()],
    };
    let x0: Vec<f64> = x0.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect();
    let dim = grid.dim();

    let (mut x, method, mut iterations, mut linear_sweeps) = match problem.operator.class() {
        OperatorClass::Laplace => {
            let (a, b) = assemble_linear(&grid, |_| SymMatrix::identity(dim), reaction, full_boundary);
            let s = projected_sor_from(&a, &b, &lo, &hi, &x0, params)?;
            (s.x, SolveMethod::ProjectedSor, s.sweeps, s.sweeps)
        }
        OperatorClass::Bellman => {
            let families: Vec<(CsrMatrix, Vec<f64>)> = problem
                .operator
                .bellman_matrices()
                .expect("bellman class")
                .iter()
                .map(|m| assemble_linear(&grid, |_| *m, reaction, full_boundary))
                .collect();
            let s = policy_iteration_from(&families, &lo, &hi, &x0, params)?;
            (s.x, SolveMethod::PolicyIteration, s.iterations, s.linear_sweeps)
        }
        _ => {
            let mid = 0.5 * (problem.operator.lambda() + problem.operator.big_lambda());
            let (a, b) = assemble_linear(&grid, |_| SymMatrix::scaled_identity(dim, mid), reaction, full_boundary);
            let relaxed = projected_sor_from(&a, &b, &lo, &hi, &x0, params)?;
            let s = newton_on_clipped_system(problem, reaction, &lo, &hi, &relaxed.x, params)?;
            (s.0, SolveMethod::SemismoothNewton, s.1, relaxed.sweeps + s.2)
        }
    };
    let project = |x: &mut Vec<f64>| {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(lo[i], hi[i]);
        }
    };
    project(&mut x);
    let mut u = GridFunction::new(grid.clone(), problem.lift(&x))?;
    let mut residual = complementarity_residual_with(&u, problem, reaction)?.sup_norm();
    // Newton iterates may sit slightly outside the box; a few restarts from
    // the projection absorb the round-off.
    let mut restarts = 0;
    while residual > outer.tol_nonlinear && method == SolveMethod::SemismoothNewton && restarts < 3 {
        let s = newton_on_clipped_system(problem, reaction, &lo, &hi, &x, params)?;
        x = s.0;
        iterations += s.1;
        linear_sweeps += s.2;
        project(&mut x);
        u = GridFunction::new(grid.clone(), problem.lift(&x))?;
        residual = complementarity_residual_with(&u, problem, reaction)?.sup_norm();
        restarts += 1;
    }
    if residual > outer.tol_nonlinear {
        return Err(Error::NotConverged { method: "obstacle solve", iterations, residual });
    }
    let tau = default_contact_tolerance(&grid, outer);
    let (lower, upper) = contact_fractions(&u, problem, tau);
    let experimental = dim == 2
        && matches!(base_class(&problem.operator), OperatorClass::PucciMinus | OperatorClass::PucciPlus);
    let report = SolveReport {
        method,
        iterations,
        linear_sweeps,
        final_residual: residual,
        contact_fraction_lower: lower,
        contact_fraction_upper: upper,
        wall_time_s: 0.0,
        experimental,
    };
    Ok((u, report))
}

fn base_class(op: &EllipticOperator) -> OperatorClass {
    op.base().class()
}

fn contact_fractions(u: &GridFunction, problem: &DoubleObstacleProblem, tau: f64) -> (f64, f64) {
    let interior = problem.grid().interior();
    if interior.is_empty() {
        return (0.0, 0.0);
    }
    let count = |pred: &dyn Fn(usize) -> bool| interior.iter().filter(|&&k| pred(k)).count() as f64;
    let n = interior.len() as f64;
    (
        count(&|k| u.value(k) - problem.lower.value(k) <= tau) / n,
        count(&|k| problem.upper.value(k) - u.value(k) <= tau) / n,
    )
}

/// Semismooth Newton on `median(x - hi, -F_h + c(x - f), x - lo) = 0`.
/// Returns `(x, newton iterations, linear sweeps)`.
fn newton_on_clipped_system(
    problem: &DoubleObstacleProblem,
    reaction: Option<&Reaction>,
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    params: &SolverParams,
) -> Result<(Vec<f64>, usize, usize)> {
    let grid = problem.grid().clone();
    // 0 = PDE row, 1 = pinned to a bound
    let branches = |x: &[f64], pde: &[f64]| -> Vec<(f64, bool)> {
        (0..x.len())
            .map(|i| {
                let (upper, lower) = (x[i] - hi[i], x[i] - lo[i]);
                if pde[i] < upper {
                    (upper, true)
                } else if pde[i] > lower {
                    (lower, true)
                } else {
                    (pde[i], false)
                }
            })
            .collect()
    };
    let residual = |x: &[f64]| {
        let full = problem.lift(x);
        let pde = pde_residual(problem, &full, reaction);
        branches(x, &pde).into_iter().map(|b| b.0).collect::<Vec<f64>>()
    };
    let jacobian = |x: &[f64]| {
        let full = problem.lift(x);
        let pde = pde_residual(problem, &full, reaction);
        let pinned = branches(x, &pde);
        let coeffs = linearized_rows(problem, &full);
        let mut builder = CsrBuilder::new(x.len());
        for (i, &k) in grid.interior().iter().enumerate() {
            if pinned[i].1 {
                builder.push(i, 1.0);
            } else {
                for (di, dj, w) in stencil(&coeffs[i], grid.dim(), grid.h()) {
                    if w == 0.0 {
                        continue;
                    }
                    let nb = grid.neighbor(k, di, dj).expect("interior stencils are complete");
                    if let Some(j) = grid.unknown_index(nb) {
                        builder.push(j, -w);
                    }
                }
                if let Some(r) = reaction {
                    builder.push(i, r.coeff);
                }
            }
            builder.finish_row();
        }
        builder.build()
    };
    let s = semismooth_newton(residual, jacobian, x0, params)?;
    Ok((s.x, s.iterations, s.linear_sweeps))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonotonicityReport {
    /// `max(u - u')` over all nodes, clipped at zero.
    pub max_violation: f64,
}

impl MonotonicityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Comparison check: with `g' ≥ g`, `φ₁' ≥ φ₁`, `φ₂' ≥ φ₂` the solutions must
/// satisfy `u' ≥ u`.
pub fn monotonicity_probe(
    problem: &DoubleObstacleProblem,
    raised: &DoubleObstacleProblem,
    params: &SolverParams,
) -> Result<MonotonicityReport> {
    if problem.grid() != raised.grid() {
        return Err(Error::GridMismatch);
    }
    if problem.operator != raised.operator {
        return Err(Error::PreconditionViolated("problems must share the operator".into()));
    }
    let grid = problem.grid();
    for k in 0..grid.len() {
        let boundary_ok = grid.is_interior(k) || raised.boundary.value(k) >= problem.boundary.value(k);
        if !boundary_ok
            || raised.lower.value(k) < problem.lower.value(k)
            || raised.upper.value(k) < problem.upper.value(k)
        {
            return Err(Error::PreconditionViolated(format!("data not raised at node {k}")));
        }
    }
    let (u, _) = solve_elliptic(problem, params)?;
    let (v, _) = solve_elliptic(raised, params)?;
    let max_violation = u
        .values()
        .iter()
        .zip(v.values())
        .fold(0.0_f64, |m, (a, b)| m.max(a - b));
    Ok(MonotonicityReport { max_violation })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CovarianceReport {
    pub fine_n: usize,
    pub coarse_n: usize,
    /// Sup distance between the solve of the rescaled problem and the
    /// rescaled fine solution.
    pub agreement: f64,
}

/// Solves `problem`, then the problem for `û(x) = u(s·x)/A` on the coarse
/// grid whose nodes map onto fine nodes under `x ↦ s·x`, with operator
/// `F_{A/s²}` and boundary data read off the fine solution, and compares.
pub fn rescaling_covariance_probe(
    problem: &DoubleObstacleProblem,
    lambda_scale: f64,
    a_scale: f64,
    params: &SolverParams,
) -> Result<CovarianceReport> {
    if !(lambda_scale > 0.0 && lambda_scale <= 1.0) || !(a_scale > 0.0) {
        return Err(Error::InvalidArgument("need 0 < lambda_scale <= 1 and A_scale > 0".into()));
    }
    let fine = problem.grid().clone();
    if fine.kind() != crate::grid::DomainKind::Box {
        return Err(Error::IncompatibleRescaling("only box domains map onto sub-boxes".into()));
    }
    let span = lambda_scale * (fine.n() - 1) as f64;
    let rounded = libm::round(span);
    if libm::fabs(span - rounded) > 1e-9 || !(rounded as usize).is_multiple_of(2) || (rounded as usize) < 4 {
        return Err(Error::IncompatibleRescaling(format!(
            "lambda_scale * (n - 1) = {span} must be an even integer >= 4"
        )));
    }
    let coarse_n = rounded as usize + 1;
    let coarse = Arc::new(Grid::new(fine.dim(), coarse_n, fine.kind())?);
    let offset = ((fine.n() - coarse_n) / 2) as isize;
    let fine_node = |k: usize| {
        let (i, j) = coarse.lattice_coords(k);
        let j = if fine.dim() == 2 { j as isize + offset } else { 0 };
        fine.node_at(i as isize + offset, j).expect("sub-box nodes exist")
    };
    let pull = |f: &GridFunction| {
        let values = (0..coarse.len()).map(|k| f.value(fine_node(k)) / a_scale).collect();
        GridFunction::new(coarse.clone(), values)
    };

    let (u, _) = solve_elliptic(problem, params)?;
    let expected = pull(&u)?;
    let op = rescale_operator(&problem.operator, a_scale / (lambda_scale * lambda_scale))?;
    let rescaled = DoubleObstacleProblem::new(op, pull(&problem.lower)?, pull(&problem.upper)?, expected.clone())?;
    let (v, _) = solve_elliptic(&rescaled, params)?;
    Ok(CovarianceReport { fine_n: fine.n(), coarse_n, agreement: v.sup_distance(&expected)? })
}
