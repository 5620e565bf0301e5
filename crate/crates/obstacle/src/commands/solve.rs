use std::time::Instant;

use obstacle_core::obstacle::{default_contact_tolerance, solve_elliptic};
use obstacle_core::parabolic::solve_parabolic;
use obstacle_core::SolveReport;
use serde::Serialize;

use super::{input_error, load, Options, EXIT_INPUT};
use crate::config::Problem;
use crate::io;
use crate::manifest::{Check, Status};

#[derive(Serialize)]
struct EllipticReport<'a> {
    kind: &'static str,
    operator: &'a str,
    dim: usize,
    n: usize,
    contact_tolerance: f64,
    report: Option<SolveReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ParabolicReport<'a> {
    kind: &'static str,
    operator: &'a str,
    dim: usize,
    n: usize,
    initial_projection: f64,
    slices: usize,
    final_time: f64,
    steps: &'a [SolveReport],
    error: Option<String>,
}

pub fn solve(opts: &Options) -> u8 {
    let run = match load(opts) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    let params = &run.config.solver;
    let problem = match run.config.build_problem() {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let grid = problem.grid().clone();
    let written = match problem {
        Problem::Elliptic(p) => {
            let clock = Instant::now();
            let outcome = solve_elliptic(&p, params);
            let mut report = EllipticReport {
                kind: "elliptic",
                operator: p.operator().name(),
                dim: grid.dim(),
                n: grid.n(),
                contact_tolerance: default_contact_tolerance(&grid, params),
                report: None,
                error: None,
            };
            let (status, checks) = match outcome {
                Ok((u, mut r)) => {
                    r.wall_time_s = clock.elapsed().as_secs_f64();
                    if let Err(e) = io::write_grid_csv(&run.path("solution.csv"), &u) {
                        return input_error(e);
                    }
                    println!(
                        "{} solve: {} iterations, residual {:.3e}, contact fractions {:.4} / {:.4}",
                        p.operator().name(),
                        r.iterations,
                        r.final_residual,
                        r.contact_fraction_lower,
                        r.contact_fraction_upper
                    );
                    let checks = vec![
                        Check::gating("solve.converged", true, format!("{:?}", r.method)),
                        Check::gating(
                            "solve.residual",
                            r.final_residual <= params.tol_nonlinear,
                            format!("{:.3e} <= {:.1e}", r.final_residual, params.tol_nonlinear),
                        ),
                        Check::info("solve.experimental", !r.experimental, format!("experimental = {}", r.experimental)),
                    ];
                    report.report = Some(r);
                    (Status::Ok, checks)
                }
                Err(e) => {
                    eprintln!("solver failure: {e}");
                    report.error = Some(e.to_string());
                    (Status::SolverFailure, vec![Check::gating("solve.converged", false, e.to_string())])
                }
            };
            io::write_json(&run.path("report.json"), &report).map(|_| (status, checks))
        }
        Problem::Parabolic(q) => {
            let traj = match solve_parabolic(&q, params) {
                Ok(t) => t,
                Err(e) => return input_error(e),
            };
            let error = traj.failure.as_ref().map(|e| e.to_string());
            let report = ParabolicReport {
                kind: "parabolic",
                operator: q.operator().name(),
                dim: grid.dim(),
                n: grid.n(),
                initial_projection: q.initial_projection(),
                slices: traj.slices.len(),
                final_time: *traj.times.last().unwrap_or(&f64::NAN),
                steps: &traj.reports,
                error: error.clone(),
            };
            let written = io::write_trajectory(&run.path("trajectory"), &traj)
                .and_then(|_| io::write_grid_csv(&run.path("solution.csv"), traj.last()))
                .and_then(|_| io::write_json(&run.path("report.json"), &report));
            println!("parabolic solve: {} slices up to t = {}", report.slices, report.final_time);
            let checks = match &error {
                None => vec![Check::gating("solve.converged", true, format!("{} steps", traj.reports.len()))],
                Some(e) => {
                    eprintln!("solver failure: {e}");
                    vec![Check::gating("solve.converged", false, e.clone())]
                }
            };
            if q.initial_projection() > 0.0 {
                eprintln!("note: initial slice projected onto the obstacles (moved by {})", q.initial_projection());
            }
            let status = if error.is_some() { Status::SolverFailure } else { Status::Ok };
            written.map(|_| (status, checks))
        }
    };
    match written {
        Ok((status, checks)) => run.finish("solve", status, checks),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
