mod common;

use common::*;
use obstacle_core::obstacle::solve_elliptic;
use obstacle_core::penalty::{default_c, epsilon_schedule, penalty_sweep, solve_penalized, PenaltyFamily};
use obstacle_core::{Error, GridFunction, SolverParams};

fn params() -> SolverParams {
    SolverParams::default()
}

#[test]
fn trivial_sweep_stays_at_zero() {
    let p = pb(101);
    let eps = epsilon_schedule(1e-1, 1e-5, 10.0).unwrap();
    let s = penalty_sweep(&p, &eps, None, None, &params()).unwrap();
    assert!(s.completed());
    for row in &s.rows {
        assert!(row.sup_penalty_term <= 1e-6);
        assert!(row.dist_to_vi <= 1e-12);
    }
}

#[test]
fn pa_sweep_converges_to_vi_solution() {
    let p = pa(401);
    let eps = epsilon_schedule(1e-1, 1e-5, 10.0).unwrap();
    let s = penalty_sweep(&p, &eps, None, None, &params()).unwrap();
    assert!(s.completed());
    assert!(s.distances_decreasing());
    assert!(s.rows.last().unwrap().dist_to_vi <= 5e-3);
    assert!(s.bound_holds());
    // with sup|G| ≈ |F_h(φ₁)| = 2 once the penalty saturates
    assert!((s.rows.last().unwrap().sup_penalty_term - 2.0).abs() < 1e-6);
}

#[test]
fn pc_sweep_is_bounded() {
    let p = pc(401);
    let eps = epsilon_schedule(1e-1, 1e-5, 10.0).unwrap();
    let s = penalty_sweep(&p, &eps, None, None, &params()).unwrap();
    assert!(s.completed());
    assert!((s.c - 33.0).abs() < 1e-6);
    assert!(s.distances_decreasing());
    assert!(s.rows.last().unwrap().dist_to_vi <= 5e-3);
    assert!(s.bound_holds());
    let values: Vec<f64> = s.rows.iter().map(|r| r.sup_penalty_term).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{values:?}");
    assert!(values.iter().all(|&v| v <= 16.0 + 1e-6));
}

#[test]
fn penalized_solutions_never_leave_the_obstacles() {
    // Soft-constraint consistency: the violations max(φ₁ - u, 0) and
    // max(u - φ₂, 0) are nonincreasing along the sweep (here identically 0).
    for p in [pa(201), pc(201)] {
        let c = default_c(&p).unwrap();
        let (vi, _) = solve_elliptic(&p, &params()).unwrap();
        let mut seed = vi;
        let mut last = (f64::INFINITY, f64::INFINITY);
        for eps in epsilon_schedule(1e-1, 1e-4, 10.0).unwrap() {
            let fam = PenaltyFamily::new(c, eps).unwrap();
            let (u, _) = solve_penalized(&p, &fam, &seed, &params()).unwrap();
            let below = u.zip_map(p.lower(), |u, l| (l - u).max(0.0)).unwrap().sup_norm();
            let above = u.zip_map(p.upper(), |u, h| (u - h).max(0.0)).unwrap().sup_norm();
            assert!(below <= last.0 + 1e-8 && above <= last.1 + 1e-8);
            last = (below, above);
            seed = u;
        }
    }
}

#[test]
fn small_epsilon_from_vi_seed() {
    let p = pa(401);
    let (vi, _) = solve_elliptic(&p, &params()).unwrap();
    let fam = PenaltyFamily::new(default_c(&p).unwrap(), 1e-4).unwrap();
    let (u, report) = solve_penalized(&p, &fam, &vi, &params()).unwrap();
    assert!(u.sup_distance(&vi).unwrap() <= 5e-3);
    assert!(report.residual <= params().tol_nonlinear);
}

#[test]
fn seed_must_carry_boundary_data() {
    let p = pa(41);
    let fam = PenaltyFamily::new(3.0, 0.1).unwrap();
    let bad = GridFunction::constant(p.grid().clone(), 0.3).unwrap();
    assert!(matches!(solve_penalized(&p, &fam, &bad, &params()), Err(Error::BoundaryMismatch { .. })));
}

#[test]
fn diverging_leg_is_recorded() {
    // A one-iteration Newton budget cannot reach the tolerance.
    let p = pa(101);
    let tight = SolverParams { max_iter_newton: 1, ..params() };
    let s = penalty_sweep(&p, &[1e-1, 1e-2], None, None, &tight);
    // the VI solve itself uses projected SOR and succeeds
    let s = s.unwrap();
    assert!(!s.completed());
    assert!(!s.rows.last().unwrap().converged);
    assert_eq!(s.failed_at, Some(s.rows.last().unwrap().epsilon));
}
