use obstacle_core::penalty::penalty_sweep as run_sweep;
use serde::Serialize;

use super::{input_error, load, Options};
use crate::config::Problem;
use crate::io;
use crate::manifest::{status_of, Check, Status};

#[derive(Serialize)]
struct SweepSummary {
    c: f64,
    bound: f64,
    max_penalty_term: f64,
    failed_at: Option<f64>,
    bound_holds: bool,
    distances_decreasing: bool,
    penalty_term_stable: bool,
}

pub fn penalty_sweep(opts: &Options) -> u8 {
    let run = match load(opts) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    let Some(pen) = run.config.penalty.clone() else {
        return input_error("/penalty: penalty-sweep needs a penalty block");
    };
    let problem = match run.config.build_problem() {
        Ok(Problem::Elliptic(p)) => p,
        Ok(Problem::Parabolic(_)) => return input_error("/problem/parabolic: penalty sweeps are elliptic only"),
        Err(e) => return input_error(e),
    };
    let params = &run.config.solver;
    let sweep = match run_sweep(&problem, &pen.eps_list, pen.c, None, params) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("solver failure: {e}");
            let checks = vec![Check::gating("sweep.reference_solve", false, e.to_string())];
            return run.finish("penalty-sweep", Status::SolverFailure, checks);
        }
    };
    let summary = SweepSummary {
        c: sweep.c,
        bound: sweep.bound,
        max_penalty_term: sweep.max_penalty_term(),
        failed_at: sweep.failed_at,
        bound_holds: sweep.bound_holds(),
        distances_decreasing: sweep.distances_decreasing(),
        penalty_term_stable: sweep.penalty_term_stable(),
    };
    let mut written = io::write_sweep_csv(&run.path("sweep.csv"), &sweep.rows)
        .and_then(|_| io::write_json(&run.path("sweep.json"), &summary));
    if let Some(u) = &sweep.last {
        written = written.and_then(|_| io::write_grid_csv(&run.path("penalized_solution.csv"), u));
    }
    if let Err(e) = written {
        return input_error(e);
    }
    for r in &sweep.rows {
        println!(
            "eps {:.1e}  dist_to_vi {:.3e}  sup|G| {:.6}  newton {}  {}",
            r.epsilon,
            r.dist_to_vi,
            r.sup_penalty_term,
            r.newton_iters,
            if r.converged { "ok" } else { "diverged" }
        );
    }
    let first = sweep.rows.first().map_or(f64::NAN, |r| r.sup_penalty_term);
    let last = sweep.rows.iter().rev().find(|r| r.converged).map_or(f64::NAN, |r| r.sup_penalty_term);
    let checks = vec![
        Check::gating(
            "sweep.legs_converged",
            sweep.completed(),
            match sweep.failed_at {
                Some(e) => format!("leg eps = {e:e} diverged"),
                None => format!("{} legs", sweep.rows.len()),
            },
        ),
        Check::gating(
            "sweep.uniform_bound",
            summary.bound_holds,
            format!("max sup|G| {:.6} <= bound {:.6}", summary.max_penalty_term, sweep.bound),
        ),
        Check::gating("sweep.distances_decreasing", summary.distances_decreasing, "dist_to_vi strictly decreasing"),
        Check::info(
            "sweep.penalty_term_stable",
            summary.penalty_term_stable,
            format!("sup|G| at smallest eps {last:.6} vs 1.1 x {first:.6} + 1e-6"),
        ),
    ];
    let status = if sweep.completed() { status_of(&checks) } else { Status::SolverFailure };
    run.finish("penalty-sweep", status, checks)
}
