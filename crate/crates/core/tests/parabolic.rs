mod common;

use common::*;
use obstacle_core::obstacle::{complementarity_residual_with, solve_elliptic, Reaction};
use obstacle_core::parabolic::{
    comparison_probe, solve_parabolic, solve_parabolic_steps, steady_state_gap, step_implicit, LateralData,
    ParabolicProblem,
};
use obstacle_core::{GridFunction, SolverParams};

fn params() -> SolverParams {
    SolverParams::default()
}

#[test]
fn trivial_data_stays_at_zero() {
    let p = pb(51);
    let q = ParabolicProblem::new(
        p.operator().clone(),
        p.lower().clone(),
        p.upper().clone(),
        LateralData::Static(GridFunction::zeros(p.grid().clone())),
        GridFunction::zeros(p.grid().clone()),
        (-1.0, 0.0),
        0.1,
    )
    .unwrap();
    let traj = solve_parabolic(&q, &params()).unwrap();
    assert!(traj.is_complete());
    assert!(traj.slices.iter().all(|s| s.sup_norm() == 0.0));
    assert_eq!(steady_state_gap(&traj, &GridFunction::zeros(p.grid().clone())).unwrap(), 0.0);
}

#[test]
fn elliptic_solution_is_a_fixed_point() {
    let q = pa_parabolic(201, (-1.0, 0.0), 0.01);
    let (u_ell, _) = solve_elliptic(&pa(201), &params()).unwrap();
    let (next, _) = step_implicit(&u_ell, -1.0, -0.99, &q, &params()).unwrap();
    assert!(next.sup_distance(&u_ell).unwrap() <= 1e-6);
}

#[test]
fn first_step_respects_obstacle_and_height() {
    let q = pa_parabolic(201, (-1.0, 0.0), 0.01);
    let zero = GridFunction::zeros(q.grid().clone());
    let (next, report) = step_implicit(&zero, -1.0, -0.99, &q, &params()).unwrap();
    assert!((0..next.values().len()).all(|k| next.value(k) >= q.lower().value(k)));
    assert!(next.sup_norm() <= 0.5);
    assert!(report.final_residual <= params().tol_nonlinear);
}

#[test]
fn slice_count_and_last_step() {
    let q = pa_parabolic(41, (-1.0, 0.0), 0.3);
    let traj = solve_parabolic(&q, &params()).unwrap();
    // ceil(1 / 0.3) + 1
    assert_eq!(traj.slices.len(), 5);
    assert_eq!(traj.reports.len(), 4);
    assert_eq!(*traj.times.last().unwrap(), 0.0);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn every_slice_satisfies_the_time_discrete_system() {
    let q = pa_parabolic(101, (-1.0, -0.5), 0.05);
    let traj = solve_parabolic(&q, &params()).unwrap();
    for (s, w) in traj.slices.windows(2).enumerate() {
        let p = q.elliptic_at(traj.times[s + 1]).unwrap();
        let dt = traj.times[s + 1] - traj.times[s];
        let reaction = Reaction { coeff: 1.0 / dt, source: q.grid().interior().iter().map(|&k| w[0].value(k)).collect() };
        let r = complementarity_residual_with(&w[1], &p, Some(&reaction)).unwrap();
        assert!(r.sup_norm() <= params().tol_nonlinear, "slice {}: {}", s + 1, r.sup_norm());
        for k in 0..w[1].values().len() {
            assert!(w[1].value(k) >= q.lower().value(k) && w[1].value(k) <= q.upper().value(k));
        }
    }
}

#[test]
fn reaches_elliptic_steady_state() {
    let q = pa_parabolic(201, (-1.0, 1.0), 0.005);
    let traj = solve_parabolic(&q, &params()).unwrap();
    assert!(traj.is_complete());
    assert_eq!(traj.slices.len(), 401);
    let (u_ell, _) = solve_elliptic(&pa(201), &params()).unwrap();
    assert!(steady_state_gap(&traj, &u_ell).unwrap() <= 1e-3);

    // relaxing from below is monotone in time
    for w in traj.slices.windows(2) {
        assert!(w[0].values().iter().zip(w[1].values()).all(|(a, b)| b >= &(a - 1e-8)));
    }
}

#[test]
fn one_step_is_far_from_steady_state() {
    let q = pa_parabolic(201, (-1.0, 1.0), 0.005);
    let traj = solve_parabolic_steps(&q, 1, &params()).unwrap();
    assert_eq!(traj.slices.len(), 2);
    let (u_ell, _) = solve_elliptic(&pa(201), &params()).unwrap();
    assert!(steady_state_gap(&traj, &u_ell).unwrap() >= 0.1);
}

#[test]
fn ordered_initial_slices_stay_ordered() {
    let q = pa_parabolic(101, (-1.0, 0.0), 0.02);
    let (u_ell, _) = solve_elliptic(&pa(101), &params()).unwrap();
    let below = q.initial().clone();
    let bump = GridFunction::from_fn(q.grid().clone(), |p| 2.0 * (1.0 - p[0] * p[0])).unwrap();
    let above = u_ell.zip_map(&bump, |u, b| u + b).unwrap();
    assert!(comparison_probe(&q, &below, &u_ell, &params()).unwrap() <= 1e-8);
    assert!(comparison_probe(&q, &u_ell, &above, &params()).unwrap() <= 1e-8);
    assert!(comparison_probe(&q, &above, &below, &params()).is_err());
}

#[test]
fn time_error_is_first_order() {
    let last = |dt: f64| solve_parabolic(&pa_parabolic(101, (-1.0, -0.8), dt), &params()).unwrap().last().clone();
    let (a, b, c) = (last(0.02), last(0.01), last(0.005));
    let d1 = a.sup_distance(&b).unwrap();
    let d2 = b.sup_distance(&c).unwrap();
    // halving dt roughly halves the change
    let ratio = d1 / d2;
    assert!(ratio > 1.6 && ratio < 2.5, "{d1} {d2}");
    assert!(d1 <= 1.0 * 0.02);
}

#[test]
fn initial_slice_is_projected() {
    let q = pa_parabolic(101, (-1.0, 0.0), 0.1);
    assert!((q.initial_projection() - 0.5).abs() < 1e-12);
    assert!((0..q.initial().values().len()).all(|k| q.initial().value(k) >= q.lower().value(k)));
}

#[test]
fn lateral_expression_data() {
    use obstacle_core::expr::parse;
    let p = pb(41);
    let lateral = parse("0.5 * t * x").unwrap();
    let initial = GridFunction::from_fn(p.grid().clone(), |x| -0.5 * x[0]).unwrap();
    let q = ParabolicProblem::new(
        p.operator().clone(),
        p.lower().clone(),
        p.upper().clone(),
        LateralData::Expr(lateral),
        initial,
        (-1.0, 0.0),
        0.25,
    )
    .unwrap();
    let traj = solve_parabolic(&q, &params()).unwrap();
    let end = traj.last();
    let g = end.grid();
    // at t = 0 the lateral data vanish and the linear profile has decayed
    assert_eq!(end.value(0), 0.0);
    assert_eq!(end.value(g.len() - 1), 0.0);
    assert!(end.sup_norm() < 0.5);
}
