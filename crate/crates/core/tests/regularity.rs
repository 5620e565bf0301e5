mod common;

use std::sync::Arc;

use common::*;
use obstacle_core::obstacle::{default_contact_tolerance, solve_elliptic};
use obstacle_core::parabolic::{solve_parabolic, Trajectory};
use obstacle_core::regularity::{
    auto_probes, contact_sets, dyadic_radii, growth_profile, gradient_holder_seminorm, holder_seminorm,
    mean_value_constant, parabolic_growth_profile, parabolic_weak_leps_check, refinement_check,
    separation_distance, weak_leps_check, Side,
};
use obstacle_core::{DomainKind, DoubleObstacleProblem, EllipticOperator, Grid, GridFunction, SolverParams};

fn params() -> SolverParams {
    SolverParams::default()
}

fn solved(p: &DoubleObstacleProblem) -> (GridFunction, f64) {
    let (u, _) = solve_elliptic(p, &params()).unwrap();
    (u, default_contact_tolerance(p.grid(), &params()))
}

fn xs(p: &DoubleObstacleProblem, nodes: &[usize]) -> Vec<f64> {
    nodes.iter().map(|&k| p.grid().point(k)[0]).collect()
}

#[test]
fn trivial_contact_sets() {
    let p = pb(101);
    let (u, tau) = solved(&p);
    let cs = contact_sets(&u, &p, tau).unwrap();
    assert!(cs.e1.is_empty() && cs.e2.is_empty());
    assert_eq!(cs.a.len(), p.grid().interior().len());
    assert_eq!(separation_distance(&cs, p.grid()), f64::INFINITY);
}

#[test]
fn pa_contact_set_is_the_tangency_interval() {
    let p = pa(401);
    let (u, tau) = solved(&p);
    let cs = contact_sets(&u, &p, tau).unwrap();
    assert!(cs.e2.is_empty());
    let x = xs(&p, &cs.e1);
    let h = p.grid().h();
    assert!((x[0] + pa_free_boundary()).abs() <= 2.0 * h);
    assert!((x.last().unwrap() - pa_free_boundary()).abs() <= 2.0 * h);
    // one interval: consecutive nodes
    assert!(cs.e1.windows(2).all(|w| w[1] == w[0] + 1));
    assert_eq!(cs.gamma1.len(), 2);
}

#[test]
fn pc_contact_sets_are_separated() {
    let p = pc(401);
    let (u, tau) = solved(&p);
    let cs = contact_sets(&u, &p, tau).unwrap();
    let (x1, x2) = (xs(&p, &cs.e1), xs(&p, &cs.e2));
    assert!(!x1.is_empty() && !x2.is_empty());
    assert!(x1.iter().all(|x| (x + 0.5).abs() <= pc_half_width() + 2.0 * p.grid().h()));
    assert!(x2.iter().all(|x| (x - 0.5).abs() <= pc_half_width() + 2.0 * p.grid().h()));
    assert!(separation_distance(&cs, p.grid()) > 0.5);
}

#[test]
fn tolerance_must_stay_below_half_the_separation() {
    let p = pb(21);
    let u = GridFunction::zeros(p.grid().clone());
    assert!(contact_sets(&u, &p, 1.0).is_err());
    assert!(contact_sets(&u, &p, 0.0).is_err());
}

#[test]
fn growth_at_free_boundary_is_quadratic() {
    for p in [pa(401), pc(401)] {
        let (u, tau) = solved(&p);
        let cs = contact_sets(&u, &p, tau).unwrap();
        let radii = dyadic_radii(p.grid().h(), 0.2);
        let probes = auto_probes(&cs, p.grid(), 0.2);
        assert!(!probes.is_empty());
        for (node, side) in probes {
            let phi = match side {
                Side::Lower => p.lower(),
                Side::Upper => p.upper(),
            };
            let prof = growth_profile(&u, phi, node, &radii, side, tau).unwrap();
            let fit = prof.fit.expect("enough rows above the noise floor");
            assert!(fit.beta >= 1.8, "beta {} at {node}", fit.beta);
            assert!(fit.r_squared >= 0.99);
            // one constant dominates every row: sup ≤ C r² with C within 2x of the smallest ratio
            let ratios: Vec<f64> = prof.rows.iter().filter(|r| r.1 > prof.floor).map(|(r, s)| s / (r * r)).collect();
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &q| (a.min(q), b.max(q)));
            assert!(hi <= 2.0 * lo, "{ratios:?}");
            assert!(prof.rows.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }
}

#[test]
fn planted_exponents_are_recovered() {
    let g = grid1(801);
    let phi = GridFunction::zeros(g.clone());
    let x0 = g.origin();
    let radii = dyadic_radii(g.h(), 0.5);
    for beta in [1.0, 1.5, 2.0] {
        let u = GridFunction::from_fn(g.clone(), |p| p[0].abs().powf(beta)).unwrap();
        let prof = growth_profile(&u, &phi, x0, &radii, Side::Lower, 1e-9).unwrap();
        let fit = prof.fit.unwrap();
        assert!((fit.beta - beta).abs() <= 0.05, "{beta}: {}", fit.beta);
    }

    // and in 2D
    let g = Arc::new(Grid::new(2, 101, DomainKind::Box).unwrap());
    let phi = GridFunction::zeros(g.clone());
    let u = GridFunction::from_fn(g.clone(), |p| (p[0] * p[0] + p[1] * p[1]).powf(0.75)).unwrap();
    let fit = growth_profile(&u, &phi, g.origin(), &dyadic_radii(g.h(), 0.5), Side::Lower, 1e-9)
        .unwrap()
        .fit
        .unwrap();
    assert!((fit.beta - 1.5).abs() <= 0.05);
}

#[test]
fn upper_side_profile_mirrors_lower() {
    let g = grid1(401);
    let phi = GridFunction::zeros(g.clone());
    let u = GridFunction::from_fn(g.clone(), |p| -p[0] * p[0]).unwrap();
    let radii = dyadic_radii(g.h(), 0.5);
    let up = growth_profile(&u, &phi, g.origin(), &radii, Side::Upper, 1e-9).unwrap();
    let down = growth_profile(&u.map(|v| -v).unwrap(), &phi, g.origin(), &radii, Side::Lower, 1e-9).unwrap();
    assert_eq!(up.rows, down.rows);
}

#[test]
fn holder_seminorms_are_stable_under_refinement() {
    let measure = |n: usize| {
        let (u, _) = solved(&pa(n));
        (
            holder_seminorm(&u, 0.99, 0.1, 100_000, 7).unwrap(),
            gradient_holder_seminorm(&u, 0.99, 0.1, 100_000, 7).unwrap(),
        )
    };
    let (a, b) = (measure(201), measure(401));
    assert!(refinement_check(a.0, b.0, 1.25).stable);
    let grad = refinement_check(a.1, b.1, 1.25);
    assert!(grad.stable, "{grad:?}");
    assert!((grad.ratio - 1.0).abs() <= 0.2);
}

#[test]
fn root_profile_seminorm() {
    // exact pair maximum straddling 0 at α = 1/2
    let g = grid1(401);
    let f = GridFunction::from_fn(g, |p| p[0].abs().sqrt()).unwrap();
    let v = holder_seminorm(&f, 0.5, 0.01, 1000, 1).unwrap();
    assert!((v - 1.0).abs() <= 0.05, "{v}");
}

#[test]
fn gradient_jump_grows_under_refinement() {
    let measure = |n: usize| {
        let g = grid1(n);
        let u = GridFunction::from_fn(g, |p| p[0].abs()).unwrap();
        gradient_holder_seminorm(&u, 0.5, 0.1, 100_000, 7).unwrap()
    };
    let check = refinement_check(measure(201), measure(401), 1.25);
    assert!(!check.stable);
    // h^{α-1} scaling
    assert!((check.ratio - 2f64.sqrt()).abs() <= 0.05, "{check:?}");
}

#[test]
fn mean_value_form_for_laplace_supersolution() {
    let g = Arc::new(Grid::new(2, 81, DomainKind::Box).unwrap());
    let w = GridFunction::from_fn(g.clone(), |p| 1.0 - (p[0] * p[0] + p[1] * p[1]) / 4.0).unwrap();
    let c = mean_value_constant(2);
    let rows = weak_leps_check(&w, &EllipticOperator::laplace(), g.origin(), 1.0, &[0.5, 0.9], 1.0, c, 1e-9).unwrap();
    for row in rows {
        assert!(row.pass);
        // {w > N} has radius 2√(1 - N) ≥ 1/2, so the whole half ball counts
        let radius = (2.0 * (1.0 - row.level).sqrt()).min(0.5);
        let area = std::f64::consts::PI * radius * radius;
        assert!((row.measured - area).abs() <= 0.05 * area, "{} vs {area}", row.measured);
        assert!((row.bound - c / row.level).abs() <= 1e-12);
    }

    // a subsolution is rejected
    let bad = w.map(|v| 2.0 - v).unwrap();
    assert!(weak_leps_check(&bad, &EllipticOperator::laplace(), g.origin(), 1.0, &[0.5], 1.0, c, 1e-9).is_err());
}

#[test]
fn capped_solution_is_a_supersolution() {
    let p = pa(201);
    let (u, _) = solved(&p);
    let w = u.map(|v| v.min(0.3)).unwrap();
    let rows = weak_leps_check(&w, p.operator(), p.grid().origin(), 1.0, &[0.05, 0.1, 0.2, 0.25], 1.0, 2.0, 1e-8)
        .unwrap();
    assert!(rows.iter().all(|r| r.pass), "{rows:?}");
}

fn planted_trajectory(t0: f64) -> Trajectory {
    let g = grid1(201);
    let times: Vec<f64> = (0..=400).map(|k| -1.0 + k as f64 * 0.0025).collect();
    let slices = times
        .iter()
        .map(|&t| GridFunction::from_fn(g.clone(), |p| p[0] * p[0] + (t - t0).abs()).unwrap())
        .collect();
    Trajectory { times, slices, reports: Vec::new(), failure: None }
}

#[test]
fn planted_space_time_field() {
    let t0 = -0.5;
    let traj = planted_trajectory(t0);
    let g = traj.slices[0].grid().clone();
    let radii = dyadic_radii(g.h(), 0.4);
    let prof = parabolic_growth_profile(&traj, g.origin(), t0, &radii, 1e-9).unwrap();
    let fit = prof.fit.unwrap();
    assert!((fit.beta - 2.0).abs() <= 0.05, "{}", fit.beta);
    // cylinders longer than the horizon are refused
    assert!(parabolic_growth_profile(&traj, g.origin(), -0.95, &[0.4], 1e-9).is_err());
}

#[test]
fn stationary_trajectory_reduces_to_spatial_profile() {
    let (u, _) = solved(&pa(201));
    let g = u.grid().clone();
    let times: Vec<f64> = (0..=100).map(|k| -1.0 + k as f64 * 0.01).collect();
    let traj = Trajectory { slices: vec![u.clone(); times.len()], times, reports: Vec::new(), failure: None };
    let radii = dyadic_radii(g.h(), 0.3);
    let prof = parabolic_growth_profile(&traj, g.origin(), -0.5, &radii, 1e-9).unwrap();
    let base = u.value(g.origin());
    for (r, sup) in prof.rows {
        let direct = g
            .ball_nodes(g.point(g.origin()), r)
            .into_iter()
            .map(|k| (u.value(k) - base).abs())
            .fold(0.0, f64::max);
        assert_eq!(sup, direct);
    }
}

#[test]
fn steady_trajectory_growth_at_contact() {
    let q = pa_parabolic(201, (-1.0, 1.0), 0.005);
    let traj = solve_parabolic(&q, &params()).unwrap();
    let g = q.grid();
    let radii = dyadic_radii(g.h(), 0.25);
    let prof = parabolic_growth_profile(&traj, g.origin(), 0.5, &radii, 1e-6).unwrap();
    assert!(prof.fit.unwrap().beta >= 0.9);
}

#[test]
fn parabolic_weak_leps_defaults() {
    let q = pa_parabolic(101, (-1.0, 0.0), 0.01);
    let traj = solve_parabolic(&q, &params()).unwrap();
    let rows = parabolic_weak_leps_check(&traj, q.grid().origin(), 0.5, -0.25, &[0.1, 0.3], 1.0, 1.0).unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.measured.is_finite() && r.measured >= 0.0 && r.bound > 0.0);
    }
}
