use std::path::PathBuf;

use obstacle_core::obstacle::{default_contact_tolerance, solve_elliptic};
use obstacle_core::parabolic::{solve_parabolic, Trajectory};
use obstacle_core::regularity::{
    auto_probes, contact_sets, dyadic_radii, gradient_holder_seminorm, growth_profile, holder_seminorm,
    mean_value_constant, parabolic_growth_profile, parabolic_weak_leps_check, refinement_check, separation_distance,
    weak_leps_check, ContactSets, GrowthProfile, RefinementCheck, RegularityReport, SeminormEstimate, Side,
    WeakLepsRow,
};
use obstacle_core::{DoubleObstacleProblem, Grid, GridFunction};
use serde::Serialize;

use super::{input_error, load, relative, thread_budget, Options, Run};
use crate::config::{ConfigError, ProbeSpec, Problem};
use crate::io;
use crate::manifest::{status_of, Check, Status};

#[derive(Serialize)]
struct RefinementEntry {
    quantity: &'static str,
    alpha: f64,
    #[serde(flatten)]
    check: RefinementCheck,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    mode: &'static str,
    source: &'static str,
    n: usize,
    n_fine: Option<usize>,
    report: &'a RegularityReport,
    refinement: &'a [RefinementEntry],
    profile_files: &'a [String],
    notes: &'a [String],
    checks: &'a [Check],
}

/// Everything one verification pass accumulates.
#[derive(Default)]
struct Findings {
    checks: Vec<Check>,
    notes: Vec<String>,
    profiles: Vec<GrowthProfile>,
    profile_files: Vec<String>,
    refinement: Vec<RefinementEntry>,
    holder: Vec<SeminormEstimate>,
    gradient_holder: Vec<SeminormEstimate>,
    weak_leps: Vec<WeakLepsRow>,
}

pub fn verify(opts: &Options) -> u8 {
    let run = match load(opts) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    match run.config.build_problem() {
        Ok(Problem::Elliptic(p)) => verify_elliptic(&run, &p, opts.inline_solve),
        Ok(Problem::Parabolic(q)) => verify_parabolic(&run, &q, opts.inline_solve),
        Err(e) => input_error(e),
    }
}

fn fine_field(run: &Run, n: usize) -> Result<GridFunction, String> {
    if let Some(u) = run.config.planted_with(n).map_err(|e| e.to_string())? {
        return Ok(u);
    }
    match run.config.build_problem_with(n).map_err(|e: ConfigError| e.to_string())? {
        Problem::Elliptic(p) => solve_elliptic(&p, &run.config.solver).map(|r| r.0).map_err(|e| e.to_string()),
        Problem::Parabolic(_) => Err("refinement needs an elliptic problem".into()),
    }
}

fn probe_nodes(run: &Run, cs: &ContactSets, grid: &Grid, f: &mut Findings) -> Vec<(usize, Side)> {
    let v = &run.config.verify;
    if cs.e1.is_empty() && cs.e2.is_empty() {
        f.notes.push("contact sets are empty; growth profiles skipped".into());
        return Vec::new();
    }
    match &v.probes {
        ProbeSpec::Keyword(_) => {
            let probes = auto_probes(cs, grid, v.r_max);
            if probes.is_empty() {
                f.notes.push(format!("no contact node lies at least r_max = {} from the boundary", v.r_max));
            }
            probes
        }
        ProbeSpec::Points(points) => points
            .iter()
            .filter_map(|q| {
                let p = [q[0], q.get(1).copied().unwrap_or(0.0)];
                let node = grid.nearest_node(p);
                let side = node.and_then(|k| {
                    if cs.e1.binary_search(&k).is_ok() {
                        Some(Side::Lower)
                    } else if cs.e2.binary_search(&k).is_ok() {
                        Some(Side::Upper)
                    } else {
                        None
                    }
                });
                match (node, side) {
                    (Some(k), Some(s)) => Some((k, s)),
                    _ => {
                        f.checks.push(Check::gating(format!("probe {q:?}"), false, "not a contact node"));
                        None
                    }
                }
            })
            .collect(),
    }
}

fn write_profile(run: &Run, f: &mut Findings, prof: GrowthProfile) {
    let path = run.path(&format!("profiles/profile_{:02}.csv", f.profiles.len()));
    match io::write_profile_csv(&path, &prof) {
        Ok(()) => f.profile_files.push(relative(&run.out, &path)),
        Err(e) => f.checks.push(Check::gating("profile output", false, e.to_string())),
    }
    f.profiles.push(prof);
}

fn seminorms(run: &Run, u: &GridFunction, f: &mut Findings) {
    let v = &run.config.verify;
    for &alpha in &v.alphas {
        for (quantity, gradient) in [("holder", false), ("gradient_holder", true)] {
            let value = if gradient {
                gradient_holder_seminorm(u, alpha, v.delta, v.pair_budget, run.seed)
            } else {
                holder_seminorm(u, alpha, v.delta, v.pair_budget, run.seed)
            };
            match value {
                Ok(value) => {
                    let est = SeminormEstimate { alpha, delta: v.delta, value };
                    if gradient {
                        f.gradient_holder.push(est);
                    } else {
                        f.holder.push(est);
                    }
                }
                Err(e) => f.checks.push(Check::gating(format!("{quantity}[alpha={alpha}]"), false, e.to_string())),
            }
        }
    }
}

fn contact_checks(cs: &ContactSets, grid: &Grid, f: &mut Findings) -> Option<f64> {
    if cs.e1.is_empty() || cs.e2.is_empty() {
        return None;
    }
    let d = separation_distance(cs, grid);
    f.checks.push(Check::gating("contact.separation", d > 0.0, format!("d(E1, E2) = {d:.6}")));
    Some(d)
}

fn weak_leps_rows(rows: Result<Vec<WeakLepsRow>, obstacle_core::Error>, f: &mut Findings) {
    match rows {
        Ok(rows) => {
            for r in &rows {
                f.checks.push(Check::gating(
                    format!("weak_leps[N={}]", r.level),
                    r.pass,
                    format!("measured {:.6} <= bound {:.6}", r.measured, r.bound),
                ));
            }
            f.weak_leps = rows;
        }
        Err(e) => f.checks.push(Check::gating("weak_leps", false, e.to_string())),
    }
}

fn finish(run: &Run, mode: &'static str, source: &'static str, n: usize, n_fine: Option<usize>, contact: &ContactSets, separation: Option<f64>, f: Findings) -> u8 {
    let report = RegularityReport {
        contact: contact.summary(),
        separation,
        profiles: f.profiles,
        holder: f.holder,
        gradient_holder: f.gradient_holder,
        weak_leps: f.weak_leps,
    };
    for note in &f.notes {
        println!("note: {note}");
    }
    let out = VerifyOutput {
        mode,
        source,
        n,
        n_fine,
        report: &report,
        refinement: &f.refinement,
        profile_files: &f.profile_files,
        notes: &f.notes,
        checks: &f.checks,
    };
    if let Err(e) = io::write_json(&run.path("regularity.json"), &out) {
        return input_error(e);
    }
    let status = status_of(&f.checks);
    run.finish("verify", status, f.checks)
}

fn verify_elliptic(run: &Run, p: &DoubleObstacleProblem, inline: bool) -> u8 {
    let v = &run.config.verify;
    let params = &run.config.solver;
    let grid = p.grid().clone();
    let (u, source) = match run.config.planted_with(grid.n()) {
        Err(e) => return input_error(e),
        Ok(Some(u)) => (u, "planted"),
        Ok(None) if inline => match solve_elliptic(p, params) {
            Ok((u, _)) => (u, "inline"),
            Err(e) => {
                eprintln!("solver failure: {e}");
                return run.finish("verify", Status::SolverFailure, vec![Check::gating("verify.solve", false, e.to_string())]);
            }
        },
        Ok(None) => {
            let path: PathBuf = run.path("solution.csv");
            if !path.is_file() {
                return input_error(format!(
                    "missing solution artifact {}; run `solve` first or pass --inline-solve",
                    path.display()
                ));
            }
            match io::read_grid_csv(&path, &grid) {
                Ok(u) => (u, "solution.csv"),
                Err(e) => return input_error(e),
            }
        }
    };
    let n_fine = 2 * grid.n() - 1;

    let analyse = || {
        let mut f = Findings::default();
        let tau = default_contact_tolerance(&grid, params);
        let cs = match contact_sets(&u, p, tau) {
            Ok(cs) => cs,
            Err(e) => {
                f.checks.push(Check::gating("contact.sets", false, e.to_string()));
                return (f, None, None);
            }
        };
        let separation = contact_checks(&cs, &grid, &mut f);
        let radii = dyadic_radii(grid.h(), v.r_max);
        for (node, side) in probe_nodes(run, &cs, &grid, &mut f) {
            let phi = if side == Side::Lower { p.lower() } else { p.upper() };
            let name = format!("growth[{:?}]", &grid.point(node)[..grid.dim()]);
            match growth_profile(&u, phi, node, &radii, side, tau) {
                Ok(prof) => {
                    f.checks.push(match prof.fit {
                        Some(fit) => Check::gating(
                            name,
                            fit.beta >= v.beta_min && fit.r_squared >= v.r_squared_min,
                            format!("beta {:.4} (>= {}), R^2 {:.5} (>= {})", fit.beta, v.beta_min, fit.r_squared, v.r_squared_min),
                        ),
                        None => Check::info(name, true, "fewer than four rows above the noise floor; beta undefined"),
                    });
                    write_profile(run, &mut f, prof);
                }
                Err(e) => f.checks.push(Check::gating(name, false, e.to_string())),
            }
        }
        seminorms(run, &u, &mut f);
        if let Some(w) = &v.weak_leps {
            let x0 = [w.x0.first().copied().unwrap_or(0.0), w.x0.get(1).copied().unwrap_or(0.0)];
            match grid.nearest_node(x0) {
                Some(node) => {
                    let c = w.c.unwrap_or_else(|| mean_value_constant(grid.dim()));
                    let rows = weak_leps_check(&u, p.operator(), node, w.r, &w.levels, w.eps, c, params.tol_nonlinear);
                    weak_leps_rows(rows, &mut f);
                }
                None => f.checks.push(Check::gating("weak_leps", false, format!("x0 = {x0:?} is not a grid node"))),
            }
        }
        (f, Some(cs), separation)
    };

    let ((mut f, cs, separation), fine) = if !v.refine {
        (analyse(), None)
    } else if thread_budget() >= 2 {
        std::thread::scope(|s| {
            let handle = s.spawn(|| fine_field(run, n_fine));
            let coarse = analyse();
            (coarse, Some(handle.join().unwrap_or_else(|_| Err("refinement thread panicked".into()))))
        })
    } else {
        (analyse(), Some(fine_field(run, n_fine)))
    };

    match fine {
        None => f.notes.push("refinement check disabled".into()),
        Some(Err(e)) => f.checks.push(Check::gating("refinement.solve", false, e)),
        Some(Ok(fine)) => {
            let coarse: Vec<(&'static str, SeminormEstimate)> = f
                .holder
                .iter()
                .map(|e| ("holder", e.clone()))
                .chain(f.gradient_holder.iter().map(|e| ("gradient_holder", e.clone())))
                .collect();
            for (quantity, est) in coarse {
                let value = if quantity == "holder" {
                    holder_seminorm(&fine, est.alpha, est.delta, v.pair_budget, run.seed)
                } else {
                    gradient_holder_seminorm(&fine, est.alpha, est.delta, v.pair_budget, run.seed)
                };
                match value {
                    Ok(value) => {
                        let check = refinement_check(est.value, value, v.refinement_threshold);
                        f.checks.push(Check::gating(
                            format!("refinement.{quantity}[alpha={}]", est.alpha),
                            check.stable,
                            format!(
                                "n {} -> {}: {:.6} -> {:.6}, ratio {:.4} (<= {})",
                                grid.n(),
                                n_fine,
                                est.value,
                                value,
                                check.ratio,
                                v.refinement_threshold
                            ),
                        ));
                        f.refinement.push(RefinementEntry { quantity, alpha: est.alpha, check });
                    }
                    Err(e) => f.checks.push(Check::gating(format!("refinement.{quantity}"), false, e.to_string())),
                }
            }
        }
    }
    let cs = cs.unwrap_or(ContactSets { e1: vec![], e2: vec![], a: vec![], gamma1: vec![], gamma2: vec![], tau: 0.0 });
    finish(run, "elliptic", source, grid.n(), v.refine.then_some(n_fine), &cs, separation, f)
}

fn verify_parabolic(run: &Run, q: &obstacle_core::parabolic::ParabolicProblem, inline: bool) -> u8 {
    let v = &run.config.verify;
    let params = &run.config.solver;
    let grid = q.grid().clone();
    let (traj, source): (Trajectory, &'static str) = if inline {
        match solve_parabolic(q, params) {
            Ok(t) if t.is_complete() => (t, "inline"),
            Ok(t) => {
                let e = t.failure.map(|e| e.to_string()).unwrap_or_default();
                eprintln!("solver failure: {e}");
                return run.finish("verify", Status::SolverFailure, vec![Check::gating("verify.solve", false, e)]);
            }
            Err(e) => return input_error(e),
        }
    } else {
        let dir = run.path("trajectory");
        if !dir.join("index.json").is_file() {
            return input_error(format!(
                "missing trajectory artifact {}; run `solve` first or pass --inline-solve",
                dir.join("index.json").display()
            ));
        }
        match io::read_trajectory(&dir, &grid) {
            Ok(t) => (t, "trajectory"),
            Err(e) => return input_error(e),
        }
    };
    let mut f = Findings::default();
    let (t_start, t_end) = q.interval();
    let t0 = v.t0.unwrap_or(if t_end - 0.5 > t_start { t_end - 0.5 } else { 0.5 * (t_start + t_end) });
    let idx = traj.nearest_slice(t0);
    let slice = &traj.slices[idx];
    let tau = default_contact_tolerance(&grid, params);
    let elliptic = match q.elliptic_at(traj.times[idx]) {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let cs = match contact_sets(slice, &elliptic, tau) {
        Ok(cs) => cs,
        Err(e) => return input_error(e),
    };
    let separation = contact_checks(&cs, &grid, &mut f);
    let radii = dyadic_radii(grid.h(), v.r_max);
    for (node, _) in probe_nodes(run, &cs, &grid, &mut f) {
        let name = format!("parabolic_growth[{:?}, t0 = {}]", &grid.point(node)[..grid.dim()], traj.times[idx]);
        match parabolic_growth_profile(&traj, node, t0, &radii, tau) {
            Ok(prof) => {
                f.checks.push(match prof.fit {
                    Some(fit) => Check::gating(
                        name,
                        fit.beta >= v.parabolic_beta_min,
                        format!("beta {:.4} (>= {}), R^2 {:.5}", fit.beta, v.parabolic_beta_min, fit.r_squared),
                    ),
                    None => Check::info(name, true, format!("{} usable radii (r^2 >= 2 dt), fewer than four above the noise floor; beta undefined", prof.rows.len())),
                });
                write_profile(run, &mut f, prof);
            }
            Err(e) => f.checks.push(Check::gating(name, false, e.to_string())),
        }
    }
    seminorms(run, traj.last(), &mut f);
    if let Some(w) = &v.weak_leps {
        let x0 = [w.x0.first().copied().unwrap_or(0.0), w.x0.get(1).copied().unwrap_or(0.0)];
        match grid.nearest_node(x0) {
            Some(node) => {
                let c = w.c.unwrap_or_else(|| mean_value_constant(grid.dim()));
                let rows = parabolic_weak_leps_check(&traj, node, w.r, w.t0, &w.levels, w.eps, c);
                weak_leps_rows(rows, &mut f);
            }
            None => f.checks.push(Check::gating("weak_leps", false, format!("x0 = {x0:?} is not a grid node"))),
        }
        f.notes.push("the parabolic weak L^eps check is heuristic".into());
    }
    if v.refine {
        f.notes.push("grid refinement checks run for elliptic problems only".into());
    }
    finish(run, "parabolic", source, grid.n(), None, &cs, separation, f)
}
