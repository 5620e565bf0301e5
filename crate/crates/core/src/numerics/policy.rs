use alloc::vec;
use alloc::vec::Vec;

use super::{projected_sor_from, CsrBuilder, CsrMatrix, SolverParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySolution {
    pub x: Vec<f64>,
    /// Outer (policy update) iterations.
    pub iterations: usize,
    pub policy: Vec<usize>,
    pub linear_sweeps: usize,
}

/// Howard iteration for `lo ≤ x ≤ hi` complementary to
/// `max_k (A_k x - b_k) = 0`: select per row the family with the largest
/// residual, solve the resulting box-constrained system by projected SOR and
/// repeat until policy and active sets stop changing.
pub fn policy_iteration(
    families: &[(CsrMatrix, Vec<f64>)],
    lo: &[f64],
    hi: &[f64],
    params: &SolverParams,
) -> Result<PolicySolution> {
    let n = families.first().map(|f| f.0.n()).unwrap_or(0);
    policy_iteration_from(families, lo, hi, &vec![0.0; n], params)
}

pub fn policy_iteration_from(
    families: &[(CsrMatrix, Vec<f64>)],
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    params: &SolverParams,
) -> Result<PolicySolution> {
    let Some((first, _)) = families.first() else {
        return Err(Error::InvalidArgument("policy iteration needs at least one family".into()));
    };
    let n = first.n();
    if let Some((a, b)) = families.iter().find(|(a, b)| a.n() != n || b.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: if a.n() != n { a.n() } else { b.len() } });
    }

    let mut policy = select(families, x0, &vec![0; n]);
    let mut x = x0.to_vec();
    let mut active: Vec<i8> = Vec::new();
    let mut linear_sweeps = 0;
    for iteration in 1..=params.max_iter_newton {
        let (a, b) = assemble(families, &policy);
        let sol = projected_sor_from(&a, &b, lo, hi, &x, params)?;
        linear_sweeps += sol.sweeps;
        x = sol.x;
        let next = select(families, &x, &policy);
        let next_active: Vec<i8> = (0..n)
            .map(|i| if x[i] <= lo[i] { -1 } else if x[i] >= hi[i] { 1 } else { 0 })
            .collect();
        if next == policy && next_active == active {
            return Ok(PolicySolution { x, iterations: iteration, policy, linear_sweeps });
        }
        policy = next;
        active = next_active;
    }
    Err(Error::NotConverged {
        method: "policy iteration",
        iterations: params.max_iter_newton,
        residual: f64::NAN,
    })
}

/// Row-wise argmax of `A_k x - b_k`; the current choice wins ties.
fn select(families: &[(CsrMatrix, Vec<f64>)], x: &[f64], current: &[usize]) -> Vec<usize> {
    (0..x.len())
        .map(|i| {
            let value = |k: usize| families[k].0.row_dot(i, x) - families[k].1[i];
            let mut best = current[i];
            let mut best_value = value(best);
            for k in 0..families.len() {
                let v = value(k);
                if v > best_value {
                    best = k;
                    best_value = v;
                }
            }
            best
        })
        .collect()
}

fn assemble(families: &[(CsrMatrix, Vec<f64>)], policy: &[usize]) -> (CsrMatrix, Vec<f64>) {
    let n = policy.len();
    let mut builder = CsrBuilder::new(n);
    let mut b = Vec::with_capacity(n);
    for (i, &k) in policy.iter().enumerate() {
        let (cols, vals) = families[k].0.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            builder.push(j, v);
        }
        builder.finish_row();
        b.push(families[k].1[i]);
    }
    (builder.build(), b)
}
