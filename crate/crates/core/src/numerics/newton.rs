use alloc::vec::Vec;

use super::{solve_linear, sup_norm, CsrMatrix, Damping, SolverParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// SOR sweeps spent in the inner linear solves.
    pub linear_sweeps: usize,
}

/// Semismooth Newton: `x ← x + t·d` with `J(x) d = -R(x)` solved by SOR and
/// `t` halved until the sup-norm residual decreases.
pub fn semismooth_newton<R, J>(
    mut residual: R,
    mut jacobian: J,
    x0: &[f64],
    params: &SolverParams,
) -> Result<NewtonSolution>
where
    R: FnMut(&[f64]) -> Vec<f64>,
    J: FnMut(&[f64]) -> CsrMatrix,
{
    params.validate()?;
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    if r.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: r.len() });
    }
    let mut norm = sup_norm(&r);
    let mut linear_sweeps = 0;
    for iteration in 0..params.max_iter_newton {
        if norm <= params.tol_nonlinear {
            return Ok(NewtonSolution { x, iterations: iteration, residual: norm, linear_sweeps });
        }
        let jac = jacobian(&x);
        if jac.n() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: jac.n() });
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = solve_linear(&jac, &rhs, params)?;
        linear_sweeps += step.sweeps;

        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step.x).map(|(a, d)| a + t * d).collect();
            let r_trial = residual(&trial);
            let n_trial = sup_norm(&r_trial);
            let accept = match params.newton_damping {
                Damping::None => n_trial.is_finite(),
                Damping::Halving { .. } => n_trial < norm || n_trial <= params.tol_nonlinear,
            };
            if accept {
                x = trial;
                r = r_trial;
                norm = n_trial;
                break;
            }
            let budget = match params.newton_damping {
                Damping::None => 0,
                Damping::Halving { max_halvings } => max_halvings,
            };
            if halvings >= budget {
                return Err(Error::NewtonDivergence { iteration, residual: norm });
            }
            halvings += 1;
            t *= 0.5;
        }
    }
    if norm <= params.tol_nonlinear {
        return Ok(NewtonSolution { x, iterations: params.max_iter_newton, residual: norm, linear_sweeps });
    }
    Err(Error::NotConverged { method: "semismooth Newton", iterations: params.max_iter_newton, residual: norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn linear_residual_converges_in_one_step() {
        let b = vec![1.0, -2.0, 3.5];
        let s = semismooth_newton(
            |x: &[f64]| x.iter().zip(&b).map(|(x, b)| x - b).collect(),
            |_: &[f64]| CsrMatrix::identity(3),
            &[0.0; 3],
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.x.iter().zip(&b).all(|(x, b)| (x - b).abs() < 1e-9));
    }

    #[test]
    fn scalar_cubic() {
        let s = semismooth_newton(
            |x: &[f64]| vec![x[0].powi(3) - 8.0],
            |x: &[f64]| CsrMatrix::diagonal(&[3.0 * x[0] * x[0]]),
            &[3.0],
            &SolverParams::default(),
        )
        .unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn damping_exhaustion_is_divergence() {
        // Residual with a wrong-signed Jacobian never decreases.
        let params = SolverParams { newton_damping: Damping::Halving { max_halvings: 3 }, ..Default::default() };
        let r = semismooth_newton(
            |x: &[f64]| vec![x[0] - 1.0],
            |_: &[f64]| CsrMatrix::diagonal(&[-1.0]),
            &[0.0],
            &params,
        );
        assert!(matches!(r, Err(Error::NewtonDivergence { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let r = semismooth_newton(
            |_: &[f64]| vec![0.0, 1.0],
            |_: &[f64]| CsrMatrix::identity(2),
            &[0.0],
            &SolverParams::default(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
