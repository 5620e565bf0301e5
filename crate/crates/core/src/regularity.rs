//! Diagnostics on discrete solutions: contact sets and free boundaries,
//! growth profiles away from contact points with power-law fits, Hölder
//! seminorms of `u` and of its difference quotients, and weak-L^ε
//! superlevel-set checks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Point};
use crate::obstacle::DoubleObstacleProblem;
use crate::operators::{apply_operator_field, EllipticOperator};
use crate::parabolic::Trajectory;

/// Relative slack for radius comparisons on lattice distances.
const SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ContactSets {
    pub e1: Vec<usize>,
    pub e2: Vec<usize>,
    /// Interior nodes strictly between the obstacles.
    pub a: Vec<usize>,
    /// Nodes of `a` with an axis neighbor in `e1` (resp. `e2`).
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    pub tau: f64,
}

impl ContactSets {
    pub fn summary(&self) -> ContactSummary {
        ContactSummary {
            e1: self.e1.len(),
            e2: self.e2.len(),
            a: self.a.len(),
            gamma1: self.gamma1.len(),
            gamma2: self.gamma2.len(),
            tau: self.tau,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ContactSummary {
    pub e1: usize,
    pub e2: usize,
    pub a: usize,
    pub gamma1: usize,
    pub gamma2: usize,
    pub tau: f64,
}

fn axis_neighbors(grid: &Grid, k: usize) -> impl Iterator<Item = usize> + '_ {
    let dirs: &[(isize, isize)] = if grid.dim() == 2 {
        &[(1, 0), (-1, 0), (0, 1), (0, -1)]
    } else {
        &[(1, 0), (-1, 0)]
    };
    dirs.iter().filter_map(move |&(di, dj)| grid.neighbor(k, di, dj))
}

/// `E1 = {u - φ₁ ≤ τ}`, `E2 = {φ₂ - u ≤ τ}` over interior nodes.
pub fn contact_sets(u: &GridFunction, problem: &DoubleObstacleProblem, tau: f64) -> Result<ContactSets> {
    if !u.same_grid(problem.lower()) {
        return Err(Error::GridMismatch);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("contact tolerance must be positive, got {tau}")));
    }
    if tau >= problem.separation() / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "contact tolerance {tau} must be below half the obstacle separation {}",
            problem.separation()
        )));
    }
    let grid = problem.grid();
    let mut label = vec![0u8; grid.len()];
    let (mut e1, mut e2, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for &k in grid.interior() {
        if u.value(k) - problem.lower().value(k) <= tau {
            label[k] = 1;
            e1.push(k);
        } else if problem.upper().value(k) - u.value(k) <= tau {
            label[k] = 2;
            e2.push(k);
        } else {
            a.push(k);
        }
    }
    let touching = |k: usize, l: u8| axis_neighbors(grid, k).any(|nb| label[nb] == l);
    let gamma1 = a.iter().copied().filter(|&k| touching(k, 1)).collect();
    let gamma2 = a.iter().copied().filter(|&k| touching(k, 2)).collect();
    Ok(ContactSets { e1, e2, a, gamma1, gamma2, tau })
}

/// Minimum distance between `E1` and `E2`; infinite if either is empty.
pub fn separation_distance(cs: &ContactSets, grid: &Grid) -> f64 {
    let mut best = f64::INFINITY;
    for &i in &cs.e1 {
        for &j in &cs.e2 {
            best = best.min(grid.distance(i, j));
        }
    }
    best
}

/// Which obstacle a growth profile measures detachment from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    /// `u - φ₁` at points of `E1`.
    Lower,
    /// `φ₂ - u` at points of `E2`.
    Upper,
}

/// Half-dyadic radii `4h·2^{k/2}` rounded to multiples of `h`, up to `r_max`
/// (appended when it is at least `h` past the last radius).
pub fn dyadic_radii(h: f64, r_max: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut r = 4.0 * h;
    while r <= r_max * (1.0 + SLACK) {
        let snapped = libm::round(r / h) * h;
        if out.last().is_none_or(|&l| snapped > l + 0.5 * h) && snapped <= r_max * (1.0 + SLACK) {
            out.push(snapped);
        }
        r *= core::f64::consts::SQRT_2;
    }
    let top = libm::floor(r_max / h + SLACK) * h;
    if out.last().is_some_and(|&l| top >= l + h * (1.0 - SLACK)) {
        out.push(top);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PowerFit {
    pub c: f64,
    pub beta: f64,
    pub r_squared: f64,
    /// Rows that entered the fit.
    pub rows: usize,
}

/// Least squares fit of `log y = log C + β log r`. Needs at least four
/// points with positive values.
pub fn fit_power_law(rows: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(r, y)| *r > 0.0 && *y > 0.0)
        .map(|&(r, y)| (libm::log(r), libm::log(y)))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - beta * p.0) * (p.1 - intercept - beta * p.0)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(PowerFit { c: libm::exp(intercept), beta, r_squared, rows: pts.len() })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GrowthProfile {
    pub node: usize,
    pub anchor: Point,
    /// Anchor time for cylinder profiles.
    pub t0: Option<f64>,
    pub side: Option<Side>,
    /// `(r, sup)` rows in increasing `r`.
    pub rows: Vec<(f64, f64)>,
    /// Rows at or below this value are excluded from the fit.
    pub floor: f64,
    /// `None` when fewer than four rows clear the floor.
    pub fit: Option<PowerFit>,
}

impl GrowthProfile {
    /// Fitted `C r^β` at `r`, if a fit exists.
    pub fn bound(&self, r: f64) -> Option<f64> {
        self.fit.map(|f| f.c * libm::pow(r, f.beta))
    }

    fn fitted(mut self) -> Self {
        let kept: Vec<(f64, f64)> = self.rows.iter().copied().filter(|&(_, s)| s > self.floor).collect();
        self.fit = fit_power_law(&kept);
        self
    }
}

fn usable_radii(radii: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    radii
        .iter()
        .copied()
        .filter(|&r| r >= lo * (1.0 - SLACK) && r <= hi * (1.0 + SLACK))
        .collect()
}

/// `sup_{B_r(x0)} (u - φ)` (or `φ - u` for [`Side::Upper`]) over the radii in
/// `[4h, dist(x0, ∂Ω)]`, with a power fit over rows above `10τ`.
pub fn growth_profile(
    u: &GridFunction,
    phi: &GridFunction,
    x0: usize,
    radii: &[f64],
    side: Side,
    tau: f64,
) -> Result<GrowthProfile> {
    if !u.same_grid(phi) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let gap = |k: usize| match side {
        Side::Lower => u.value(k) - phi.value(k),
        Side::Upper => phi.value(k) - u.value(k),
    };
    if x0 >= grid.len() || gap(x0) > tau {
        return Err(Error::NotAContactPoint { node: x0 });
    }
    let radii = usable_radii(radii, 4.0 * grid.h(), grid.distance_to_edge(x0));
    if radii.is_empty() {
        return Err(Error::EmptyRadiiWindow);
    }
    let anchor = grid.point(x0);
    let rows = radii
        .iter()
        .map(|&r| {
            let sup = grid.ball_nodes(anchor, r).into_iter().map(gap).fold(0.0, f64::max);
            (r, sup)
        })
        .collect();
    Ok(GrowthProfile { node: x0, anchor, t0: None, side: Some(side), rows, floor: 10.0 * tau, fit: None }.fitted())
}

/// `sup |u - u(X0)|` over the cylinders `B_r(x0) × [t0 - r², t0 + r²]`, with
/// the time window endpoints snapped to the nearest slices.
pub fn parabolic_growth_profile(
    traj: &Trajectory,
    x0: usize,
    t0: f64,
    radii: &[f64],
    tau: f64,
) -> Result<GrowthProfile> {
    let first = traj.slices.first().ok_or(Error::InvalidArgument("empty trajectory".into()))?;
    let grid = first.grid();
    if x0 >= grid.len() {
        return Err(Error::InvalidArgument(format!("node {x0} is not on the grid")));
    }
    let dt = traj
        .times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let radii: Vec<f64> = usable_radii(radii, 4.0 * grid.h(), grid.distance_to_edge(x0))
        .into_iter()
        .filter(|&r| r * r >= 2.0 * dt * (1.0 - SLACK))
        .collect();
    let Some(&r_max) = radii.last() else {
        return Err(Error::EmptyRadiiWindow);
    };
    let (t_first, t_last) = (traj.times[0], *traj.times.last().unwrap_or(&traj.times[0]));
    let margin = r_max * r_max;
    if t0 - margin < t_first - SLACK || t0 + margin > t_last + SLACK {
        return Err(Error::PreconditionViolated(format!(
            "anchor time {t0} needs a margin of {margin} inside [{t_first}, {t_last}]"
        )));
    }
    let centre = traj.nearest_slice(t0);
    let base = traj.slices[centre].value(x0);
    let anchor = grid.point(x0);
    let rows = radii
        .iter()
        .map(|&r| {
            let (a, b) = (traj.nearest_slice(t0 - r * r), traj.nearest_slice(t0 + r * r));
            let nodes = grid.ball_nodes(anchor, r);
            let sup = traj.slices[a..=b]
                .iter()
                .flat_map(|s| nodes.iter().map(move |&k| libm::fabs(s.value(k) - base)))
                .fold(0.0, f64::max);
            (r, sup)
        })
        .collect();
    Ok(GrowthProfile { node: x0, anchor, t0: Some(traj.times[centre]), side: None, rows, floor: 10.0 * tau, fit: None }
        .fitted())
}

/// Contact nodes next to the free boundary: per connected component of
/// `E1` (resp. `E2`), the component's boundary nodes with extreme
/// coordinates. Nodes closer than `r_max` to the domain edge are skipped.
pub fn auto_probes(cs: &ContactSets, grid: &Grid, r_max: f64) -> Vec<(usize, Side)> {
    let mut out = Vec::new();
    for (set, side) in [(&cs.e1, Side::Lower), (&cs.e2, Side::Upper)] {
        let mut member = vec![false; grid.len()];
        for &k in set {
            member[k] = true;
        }
        let mut seen = vec![false; grid.len()];
        for &start in set {
            if seen[start] {
                continue;
            }
            let mut component = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                component.push(k);
                for nb in axis_neighbors(grid, k) {
                    if member[nb] && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
            let edge: Vec<usize> = component
                .into_iter()
                .filter(|&k| grid.is_interior(k) && axis_neighbors(grid, k).any(|nb| !member[nb]))
                .filter(|&k| grid.distance_to_edge(k) >= r_max * (1.0 - SLACK))
                .collect();
            let mut picks: Vec<usize> = Vec::new();
            for axis in 0..grid.dim() {
                let key = |k: &usize| grid.point(*k)[axis];
                let lo = edge.iter().copied().min_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
                let hi = edge.iter().copied().max_by(|a, b| key(a).total_cmp(&key(b)).then(b.cmp(a)));
                picks.extend(lo.into_iter().chain(hi));
            }
            picks.sort_unstable();
            picks.dedup();
            out.extend(picks.into_iter().map(|k| (k, side)));
        }
    }
    out
}

fn holder_over(
    grid: &Grid,
    values: &[Option<f64>],
    alpha: f64,
    delta: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if pair_budget < 1000 {
        return Err(Error::InvalidArgument("pair budget must be at least 1000".into()));
    }
    let nodes: Vec<(Point, f64)> = (0..grid.len())
        .filter(|&k| grid.distance_to_edge(k) >= delta * (1.0 - SLACK))
        .filter_map(|k| values[k].map(|v| (grid.point(k), v)))
        .collect();
    let min_sep = 2.0 * grid.h() * (1.0 - SLACK);
    let ratio = |a: &(Point, f64), b: &(Point, f64)| {
        let d = libm::hypot(a.0[0] - b.0[0], a.0[1] - b.0[1]);
        (d >= min_sep).then(|| libm::fabs(a.1 - b.1) / libm::pow(d, alpha))
    };
    let total = nodes.len() * nodes.len().saturating_sub(1) / 2;
    let mut best: Option<f64> = None;
    if grid.dim() == 1 || total <= pair_budget {
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if let Some(q) = ratio(&nodes[i], &nodes[j]) {
                    best = Some(best.map_or(q, |b: f64| b.max(q)));
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut accepted = 0;
        for _ in 0..4 * pair_budget {
            if accepted == pair_budget {
                break;
            }
            let i = rng.random_range(0..nodes.len());
            let j = rng.random_range(0..nodes.len());
            if let Some(q) = ratio(&nodes[i], &nodes[j]) {
                accepted += 1;
                best = Some(best.map_or(q, |b: f64| b.max(q)));
            }
        }
    }
    best.ok_or(Error::NoAdmissiblePairs)
}

/// `max |f(x) - f(y)| / |x - y|^α` over node pairs in `{dist(·, ∂Ω) ≥ δ}` with
/// `|x - y| ≥ 2h`. All pairs are used in 1D and whenever their number fits
/// the budget; otherwise `pair_budget` pairs are drawn with the given seed.
pub fn holder_seminorm(f: &GridFunction, alpha: f64, delta: f64, pair_budget: usize, seed: u64) -> Result<f64> {
    let values: Vec<Option<f64>> = f.values().iter().map(|&v| Some(v)).collect();
    holder_over(f.grid(), &values, alpha, delta, pair_budget, seed)
}

/// Centered difference quotient `(u(x + h e) - u(x - h e)) / 2h` along axis
/// `axis`, defined where both neighbors exist.
pub fn difference_quotient(u: &GridFunction, axis: usize) -> Vec<Option<f64>> {
    let grid = u.grid();
    let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
    (0..grid.len())
        .map(|k| {
            let fwd = grid.neighbor(k, di, dj)?;
            let bwd = grid.neighbor(k, -di, -dj)?;
            Some((u.value(fwd) - u.value(bwd)) / (2.0 * grid.h()))
        })
        .collect()
}

/// Max over axes of the Hölder seminorm of the difference quotients.
pub fn gradient_holder_seminorm(
    u: &GridFunction,
    alpha: f64,
    delta: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    let grid = u.grid();
    let mut best = 0.0_f64;
    for axis in 0..grid.dim() {
        let dq = difference_quotient(u, axis);
        best = best.max(holder_over(grid, &dq, alpha, delta, pair_budget, seed.wrapping_add(axis as u64))?);
    }
    Ok(best)
}

/// Ratio of a seminorm between a coarse and a refined run together with the
/// verdict against a growth threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RefinementCheck {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub stable: bool,
}

/// `stable` iff `max(fine/coarse, coarse/fine) ≤ threshold`.
pub fn refinement_check(coarse: f64, fine: f64, threshold: f64) -> RefinementCheck {
    let ratio = if coarse > 0.0 && fine > 0.0 {
        (fine / coarse).max(coarse / fine)
    } else if coarse == fine {
        1.0
    } else {
        f64::INFINITY
    };
    RefinementCheck { coarse, fine, ratio, threshold, stable: ratio <= threshold }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeakLepsRow {
    pub level: f64,
    /// `|{w > N} ∩ B_{r/2}(x0)|` as node count times `h^d`.
    pub measured: f64,
    /// `C w(x0) r^d / N^ε`.
    pub bound: f64,
    pub pass: bool,
}

/// `|B_1| 2^{-d}`: with `ε = 1` this turns the bound into the mean-value
/// form `N·|{w > N} ∩ B_{r/2}| ≤ |B_{r/2}| w(x0)`.
pub fn mean_value_constant(dim: usize) -> f64 {
    if dim == 2 {
        core::f64::consts::PI / 4.0
    } else {
        1.0
    }
}

/// Superlevel-set measure check for a nonnegative discrete supersolution
/// `w` of `F` on `B_r(x0)`.
pub fn weak_leps_check(
    w: &GridFunction,
    operator: &EllipticOperator,
    x0: usize,
    r: f64,
    levels: &[f64],
    eps: f64,
    c: f64,
    tol: f64,
) -> Result<Vec<WeakLepsRow>> {
    let grid = w.grid();
    if x0 >= grid.len() || !(r > 0.0) || !(eps > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument("weak L^eps check needs a grid node, r > 0, eps > 0, C > 0".into()));
    }
    if let Some(n) = levels.iter().find(|n| !(**n > 0.0)) {
        return Err(Error::InvalidArgument(format!("levels must be positive, got {n}")));
    }
    let anchor = grid.point(x0);
    let ball = grid.ball_nodes(anchor, r);
    if let Some(&k) = ball.iter().find(|&&k| w.value(k) < 0.0) {
        return Err(Error::PreconditionViolated(format!("w is negative at node {k}")));
    }
    let f = apply_operator_field(operator, w)?;
    if let Some(&k) = ball.iter().find(|&&k| f.get(k).is_some_and(|v| v > tol)) {
        return Err(Error::PreconditionViolated(format!("w is not a supersolution at node {k}")));
    }
    let half = grid.ball_nodes(anchor, r / 2.0);
    let cell = libm::pow(grid.h(), grid.dim() as f64);
    let scale = c * w.value(x0) * libm::pow(r, grid.dim() as f64);
    Ok(levels
        .iter()
        .map(|&level| {
            let measured = half.iter().filter(|&&k| w.value(k) > level).count() as f64 * cell;
            let bound = scale / libm::pow(level, eps);
            WeakLepsRow { level, measured, bound, pass: measured <= bound }
        })
        .collect())
}

/// Space-time variant on `B_R(x0) × (t_start, t0)`: the measured set is
/// `{w > N}` over slices in the window, weighted by the time step, against
/// `C w(x0, t0) R^{d+2} / N^ε`. Heuristic: the region is a configuration
/// choice, not a sharp statement.
pub fn parabolic_weak_leps_check(
    traj: &Trajectory,
    x0: usize,
    radius: f64,
    t0: f64,
    levels: &[f64],
    eps: f64,
    c: f64,
) -> Result<Vec<WeakLepsRow>> {
    let first = traj.slices.first().ok_or(Error::InvalidArgument("empty trajectory".into()))?;
    let grid = first.grid();
    if x0 >= grid.len() || !(radius > 0.0) || !(eps > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument("weak L^eps check needs a grid node, R > 0, eps > 0, C > 0".into()));
    }
    let ball = grid.ball_nodes(grid.point(x0), radius);
    let end = traj.nearest_slice(t0);
    let anchor = traj.slices[end].value(x0);
    if anchor < 0.0 {
        return Err(Error::PreconditionViolated("w(x0, t0) is negative".into()));
    }
    let cell = libm::pow(grid.h(), grid.dim() as f64);
    let scale = c * anchor * libm::pow(radius, grid.dim() as f64 + 2.0);
    Ok(levels
        .iter()
        .map(|&level| {
            let mut measured = 0.0;
            for s in 1..end {
                let dt = traj.times[s] - traj.times[s - 1];
                let count = ball.iter().filter(|&&k| traj.slices[s].value(k) > level).count();
                measured += count as f64 * cell * dt;
            }
            let bound = scale / libm::pow(level, eps);
            WeakLepsRow { level, measured, bound, pass: measured <= bound }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SeminormEstimate {
    pub alpha: f64,
    pub delta: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegularityReport {
    pub contact: ContactSummary,
    /// `None` encodes an empty `E1` or `E2`.
    pub separation: Option<f64>,
    pub profiles: Vec<GrowthProfile>,
    pub holder: Vec<SeminormEstimate>,
    pub gradient_holder: Vec<SeminormEstimate>,
    pub weak_leps: Vec<WeakLepsRow>,
}
