//! Shared fixtures and closed-form oracles.
#![allow(dead_code)]

use std::sync::Arc;

use obstacle_core::parabolic::{LateralData, ParabolicProblem};
use obstacle_core::{DomainKind, DoubleObstacleProblem, EllipticOperator, Grid, GridFunction};

pub fn grid1(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(1, n, DomainKind::Box).unwrap())
}

pub fn problem1(
    n: usize,
    op: EllipticOperator,
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
) -> DoubleObstacleProblem {
    let g = grid1(n);
    DoubleObstacleProblem::new(
        op,
        GridFunction::from_fn(g.clone(), |p| lower(p[0])).unwrap(),
        GridFunction::from_fn(g.clone(), |p| upper(p[0])).unwrap(),
        GridFunction::zeros(g),
    )
    .unwrap()
}

/// Single lower obstacle `0.5 - x²`, inactive upper obstacle.
pub fn pa(n: usize) -> DoubleObstacleProblem {
    problem1(n, EllipticOperator::laplace(), |x| 0.5 - x * x, |_| 10.0)
}

/// Constant obstacles ±1 with zero data.
pub fn pb(n: usize) -> DoubleObstacleProblem {
    problem1(n, EllipticOperator::laplace(), |_| -1.0, |_| 1.0)
}

/// Two parabolic obstacles touching the solution near ∓1/2.
pub fn pc(n: usize) -> DoubleObstacleProblem {
    problem1(
        n,
        EllipticOperator::laplace(),
        |x| 0.4 - 8.0 * (x + 0.5) * (x + 0.5),
        |x| -0.4 + 8.0 * (x - 0.5) * (x - 0.5),
    )
}

/// Free boundary of `pa`: tangent from (1, 0) to `0.5 - x²` touches at
/// `x* = 1 - 1/√2`.
pub fn pa_free_boundary() -> f64 {
    1.0 - std::f64::consts::FRAC_1_SQRT_2
}

pub fn pa_exact(x: f64) -> f64 {
    let xs = pa_free_boundary();
    let a = x.abs();
    if a <= xs {
        0.5 - x * x
    } else {
        // tangent line minus parabola is (|x| - x*)²
        0.5 - x * x + (a - xs) * (a - xs)
    }
}

/// Half-width of each contact interval of `pc`: the tangents from (-1, 0)
/// and through the origin touch `φ₁` at `-1/2 ∓ a` with `a² - a + 1/20 = 0`.
pub fn pc_half_width() -> f64 {
    (1.0 - 0.8f64.sqrt()) / 2.0
}

pub fn pc_exact(x: f64) -> f64 {
    let a = pc_half_width();
    let lower = |x: f64| 0.4 - 8.0 * (x + 0.5) * (x + 0.5);
    let left = |x: f64| {
        if x <= -0.5 - a {
            16.0 * a * (x + 1.0)
        } else if x <= -0.5 + a {
            lower(x)
        } else {
            -16.0 * a * x
        }
    };
    if x <= 0.0 {
        left(x)
    } else {
        -left(-x)
    }
}

pub fn sup_error(u: &GridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    let g = u.grid();
    (0..g.len())
        .map(|k| (u.value(k) - exact(g.point(k)[0])).abs())
        .fold(0.0, f64::max)
}

/// Parabolic version of `pa` with zero lateral data and `u₀ ≡ 0` (projected
/// onto the obstacles on construction).
pub fn pa_parabolic(n: usize, interval: (f64, f64), dt: f64) -> ParabolicProblem {
    let p = pa(n);
    ParabolicProblem::new(
        p.operator().clone(),
        p.lower().clone(),
        p.upper().clone(),
        LateralData::Static(GridFunction::zeros(p.grid().clone())),
        GridFunction::zeros(p.grid().clone()),
        interval,
        dt,
    )
    .unwrap()
}
