//! Fully nonlinear uniformly elliptic operators `F(D²u)`.
//!
//! Every catalog member is positively 1-homogeneous and piecewise linear, so
//! it can be written as `F(M) = tr(A(M) M)` for a coefficient matrix `A(M)`
//! with eigenvalues in `[λ, Λ]`. [`EllipticOperator::linearize`] returns that
//! matrix; it is the Newton/Howard linearization used by the solvers.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, NodeField};

/// Symmetric `d × d` matrix, `d ∈ {1, 2}`; only the upper triangle is stored.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymMatrix {
    dim: usize,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl SymMatrix {
    pub fn scalar(m: f64) -> Self {
        Self { dim: 1, xx: m, xy: 0.0, yy: 0.0 }
    }

    pub fn new2(xx: f64, xy: f64, yy: f64) -> Self {
        Self { dim: 2, xx, xy, yy }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, a: f64) -> Self {
        if dim == 1 {
            Self::scalar(a)
        } else {
            Self::new2(a, 0.0, a)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::scaled_identity(dim, 0.0)
    }

    /// Builds from a dense row-major `d × d` array; rejects asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        match rows {
            [r] if r.len() == 1 => Ok(Self::scalar(r[0])),
            [r0, r1] if r0.len() == 2 && r1.len() == 2 => {
                if r0[1] != r1[0] {
                    return Err(Error::InvalidOperator(format!(
                        "matrix is not symmetric ({} != {})",
                        r0[1], r1[0]
                    )));
                }
                Ok(Self::new2(r0[0], r0[1], r1[1]))
            }
            _ => Err(Error::InvalidOperator("matrix must be 1x1 or 2x2".into())),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        if self.dim == 1 {
            alloc::vec![alloc::vec![self.xx]]
        } else {
            alloc::vec![alloc::vec![self.xx, self.xy], alloc::vec![self.xy, self.yy]]
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xx(&self) -> f64 {
        self.xx
    }

    pub fn xy(&self) -> f64 {
        self.xy
    }

    pub fn yy(&self) -> f64 {
        self.yy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// `tr(self · other)`.
    pub fn frobenius_dot(&self, other: &SymMatrix) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { dim: self.dim, xx: c * self.xx, xy: c * self.xy, yy: c * self.yy }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self {
            dim: self.dim,
            xx: self.xx + other.xx,
            xy: self.xy + other.xy,
            yy: self.yy + other.yy,
        }
    }

    /// Eigenvalues in decreasing order (the second is 0 in 1D and unused).
    pub fn eigenvalues(&self) -> [f64; 2] {
        if self.dim == 1 {
            return [self.xx, 0.0];
        }
        let mean = 0.5 * (self.xx + self.yy);
        let rad = libm::hypot(0.5 * (self.xx - self.yy), self.xy);
        [mean + rad, mean - rad]
    }

    /// Eigenvalues (decreasing) and the rotation `(cos θ, sin θ)` of the first
    /// eigenvector; the second is `(-sin θ, cos θ)`.
    fn eigen(&self) -> ([f64; 2], (f64, f64)) {
        let theta = 0.5 * libm::atan2(2.0 * self.xy, self.xx - self.yy);
        (self.eigenvalues(), (libm::cos(theta), libm::sin(theta)))
    }

    /// `w1 v1 v1ᵀ + w2 v2 v2ᵀ` for the eigenbasis of `self`.
    fn with_eigenweights(&self, rot: (f64, f64), w: [f64; 2]) -> SymMatrix {
        let (c, s) = rot;
        SymMatrix::new2(
            w[0] * c * c + w[1] * s * s,
            (w[0] - w[1]) * c * s,
            w[0] * s * s + w[1] * c * c,
        )
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 1 {
            self.xx
        } else {
            self.eigenvalues()[1]
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorClass {
    Laplace,
    PucciMinus,
    PucciPlus,
    Bellman,
    Rescaled,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Laplace,
    PucciMinus,
    PucciPlus,
    Bellman(Vec<SymMatrix>),
    Rescaled(Box<EllipticOperator>, f64),
}

/// A catalog operator together with its ellipticity constants `λ ≤ Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticOperator {
    kind: Kind,
    lambda: f64,
    big_lambda: f64,
}

fn check_constants(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
        return Err(Error::InvalidOperator(format!(
            "ellipticity constants must satisfy 0 < lambda <= Lambda (got {lambda}, {big_lambda})"
        )));
    }
    Ok(())
}

impl EllipticOperator {
    /// The Laplacian, `λ = Λ = 1`.
    pub fn laplace() -> Self {
        Self { kind: Kind::Laplace, lambda: 1.0, big_lambda: 1.0 }
    }

    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_constants(lambda, big_lambda)?;
        Ok(Self { kind: Kind::PucciMinus, lambda, big_lambda })
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_constants(lambda, big_lambda)?;
        Ok(Self { kind: Kind::PucciPlus, lambda, big_lambda })
    }

    /// `F(M) = min_k tr(A_k M)`. Without explicit constants the extreme
    /// eigenvalues of the family are used.
    pub fn bellman(matrices: Vec<SymMatrix>, constants: Option<(f64, f64)>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidOperator("bellman family is empty".into()));
        };
        let dim = first.dim();
        if let Some(m) = matrices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
        }
        let lo = matrices.iter().map(SymMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
        let hi = matrices.iter().map(SymMatrix::max_eigenvalue).fold(f64::NEG_INFINITY, f64::max);
        let (lambda, big_lambda) = constants.unwrap_or((lo, hi));
        check_constants(lambda, big_lambda)?;
        let slack = 1e-12 * big_lambda;
        if lo < lambda - slack || hi > big_lambda + slack {
            return Err(Error::InvalidOperator(format!(
                "bellman eigenvalues [{lo}, {hi}] outside [{lambda}, {big_lambda}]"
            )));
        }
        Ok(Self { kind: Kind::Bellman(matrices), lambda, big_lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn class(&self) -> OperatorClass {
        match self.kind {
            Kind::Laplace => OperatorClass::Laplace,
            Kind::PucciMinus => OperatorClass::PucciMinus,
            Kind::PucciPlus => OperatorClass::PucciPlus,
            Kind::Bellman(_) => OperatorClass::Bellman,
            Kind::Rescaled(..) => OperatorClass::Rescaled,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Laplace => "laplace",
            Kind::PucciMinus => "pucci_minus",
            Kind::PucciPlus => "pucci_plus",
            Kind::Bellman(_) => "bellman",
            Kind::Rescaled(..) => "rescaled",
        }
    }

    /// The operator with all rescalings stripped.
    pub fn base(&self) -> &EllipticOperator {
        match &self.kind {
            Kind::Rescaled(base, _) => base.base(),
            _ => self,
        }
    }

    pub fn bellman_matrices(&self) -> Option<&[SymMatrix]> {
        match &self.kind {
            Kind::Bellman(m) => Some(m),
            _ => None,
        }
    }

    /// Space dimension the operator is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            Kind::Bellman(m) => Some(m[0].dim()),
            Kind::Rescaled(base, _) => base.dim(),
            _ => None,
        }
    }

    fn check_dim(&self, m: &SymMatrix) -> Result<()> {
        match self.dim() {
            Some(d) if d != m.dim() => Err(Error::DimensionMismatch { expected: d, found: m.dim() }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, m: &SymMatrix) -> Result<f64> {
        self.check_dim(m)?;
        Ok(match &self.kind {
            Kind::Laplace => m.trace(),
            Kind::PucciPlus => self.pucci(m, self.big_lambda, self.lambda),
            Kind::PucciMinus => self.pucci(m, self.lambda, self.big_lambda),
            Kind::Bellman(family) => family
                .iter()
                .map(|a| a.frobenius_dot(m))
                .fold(f64::INFINITY, f64::min),
            Kind::Rescaled(base, c) => base.eval(&m.scale(*c))? / c,
        })
    }

    /// Weighted eigenvalue sum: `pos` multiplies positive eigenvalues, `neg`
    /// the negative ones.
    fn pucci(&self, m: &SymMatrix, pos: f64, neg: f64) -> f64 {
        let weigh = |mu: f64| if mu > 0.0 { pos * mu } else { neg * mu };
        let mu = m.eigenvalues();
        if m.dim() == 1 {
            weigh(mu[0])
        } else {
            weigh(mu[0]) + weigh(mu[1])
        }
    }

    /// Returns `(F(M), A)` with `F(M) = tr(A M)` and `A` the active
    /// coefficient matrix at `M` (a generalized derivative of `F`).
    pub fn linearize(&self, m: &SymMatrix) -> Result<(f64, SymMatrix)> {
        self.check_dim(m)?;
        let dim = m.dim();
        match &self.kind {
            Kind::Laplace => Ok((m.trace(), SymMatrix::identity(dim))),
            Kind::PucciPlus | Kind::PucciMinus => {
                let (pos, neg) = if self.kind == Kind::PucciPlus {
                    (self.big_lambda, self.lambda)
                } else {
                    (self.lambda, self.big_lambda)
                };
                let weight = |mu: f64| if mu > 0.0 { pos } else { neg };
                if dim == 1 {
                    let w = weight(m.xx);
                    return Ok((w * m.xx, SymMatrix::scalar(w)));
                }
                let (mu, rot) = m.eigen();
                let w = [weight(mu[0]), weight(mu[1])];
                Ok((w[0] * mu[0] + w[1] * mu[1], m.with_eigenweights(rot, w)))
            }
            Kind::Bellman(family) => {
                let mut best = (f64::INFINITY, family[0]);
                for a in family {
                    let v = a.frobenius_dot(m);
                    if v < best.0 {
                        best = (v, *a);
                    }
                }
                Ok(best)
            }
            Kind::Rescaled(base, c) => {
                let (v, a) = base.linearize(&m.scale(*c))?;
                Ok((v / c, a))
            }
        }
    }
}

/// `M ↦ F(cM)/c`, which has the same ellipticity constants as `F`.
pub fn rescale_operator(op: &EllipticOperator, c: f64) -> Result<EllipticOperator> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("rescaling factor must be positive, got {c}")));
    }
    Ok(EllipticOperator {
        kind: Kind::Rescaled(Box::new(op.clone()), c),
        lambda: op.lambda,
        big_lambda: op.big_lambda,
    })
}

/// Centered second differences at `node`; the mixed derivative uses the
/// four diagonal neighbors.
pub fn discrete_hessian(u: &GridFunction, node: usize) -> Result<SymMatrix> {
    hessian_at(u.grid(), u.values(), node)
}

pub(crate) fn hessian_at(grid: &crate::grid::Grid, values: &[f64], node: usize) -> Result<SymMatrix> {
    let at = |di: isize, dj: isize| {
        grid.neighbor(node, di, dj)
            .map(|k| values[k])
            .ok_or(Error::StencilOutsideDomain { node })
    };
    let h2 = grid.h() * grid.h();
    let c = values[node];
    let uxx = (at(1, 0)? - 2.0 * c + at(-1, 0)?) / h2;
    if grid.dim() == 1 {
        return Ok(SymMatrix::scalar(uxx));
    }
    let uyy = (at(0, 1)? - 2.0 * c + at(0, -1)?) / h2;
    let uxy = (at(1, 1)? + at(-1, -1)? - at(1, -1)? - at(-1, 1)?) / (4.0 * h2);
    Ok(SymMatrix::new2(uxx, uxy, uyy))
}

/// Finite-difference weights of `u ↦ tr(A D²_h u)` as `(di, dj, weight)`;
/// entries with zero weight can be skipped.
pub(crate) fn stencil(a: &SymMatrix, dim: usize, h: f64) -> [(isize, isize, f64); 9] {
    let h2 = h * h;
    if dim == 1 {
        let w = a.xx() / h2;
        let mut s = [(0, 0, 0.0); 9];
        s[0] = (0, 0, -2.0 * w);
        s[1] = (1, 0, w);
        s[2] = (-1, 0, w);
        return s;
    }
    let (wx, wy, wc) = (a.xx() / h2, a.yy() / h2, a.xy() / (2.0 * h2));
    [
        (0, 0, -2.0 * (wx + wy)),
        (1, 0, wx),
        (-1, 0, wx),
        (0, 1, wy),
        (0, -1, wy),
        (1, 1, wc),
        (-1, -1, wc),
        (1, -1, -wc),
        (-1, 1, -wc),
    ]
}

/// `F(D²_h u)` at every interior node; other nodes are absent.
pub fn apply_operator_field(op: &EllipticOperator, u: &GridFunction) -> Result<NodeField> {
    let grid = u.grid();
    let mut values = alloc::vec![None; grid.len()];
    for &k in grid.interior() {
        values[k] = Some(op.eval(&discrete_hessian(u, k)?)?);
    }
    Ok(NodeField::new(grid.clone(), values))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EllipticityReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

/// Absolute slack allowed on the sampled ellipticity inequalities.
pub const ELLIPTICITY_SLACK: f64 = 1e-10;

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let mut r = || rng.random_range(-scale..scale);
    if dim == 1 {
        SymMatrix::scalar(r())
    } else {
        SymMatrix::new2(r(), r(), r())
    }
}

/// Random nonzero positive semidefinite matrix; every third draw is rank one.
fn random_psd(rng: &mut ChaCha8Rng, dim: usize, draw: usize) -> SymMatrix {
    loop {
        let n = if dim == 1 {
            let b: f64 = rng.random_range(-2.0..2.0);
            SymMatrix::scalar(b * b)
        } else if draw.is_multiple_of(3) {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            SymMatrix::new2(a * a, a * b, b * b)
        } else {
            let b: [f64; 4] = core::array::from_fn(|_| rng.random_range(-2.0..2.0));
            // B Bᵀ for B = [[b0, b1], [b2, b3]]
            SymMatrix::new2(b[0] * b[0] + b[1] * b[1], b[0] * b[2] + b[1] * b[3], b[2] * b[2] + b[3] * b[3])
        };
        if n.trace() > 1e-8 {
            return n;
        }
    }
}

/// Samples `λ tr N ≤ F(M+N) - F(M) ≤ Λ tr N` over random symmetric `M` and
/// positive semidefinite `N ≠ 0`.
pub fn check_ellipticity(op: &EllipticOperator, samples: usize, seed: u64) -> EllipticityReport {
    let dim = op.dim().unwrap_or(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EllipticityReport {
        samples,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        violations: 0,
    };
    for draw in 0..samples {
        let m = random_symmetric(&mut rng, dim, 5.0);
        let n = random_psd(&mut rng, dim, draw);
        let diff = op.eval(&m.add(&n)).expect("dims match") - op.eval(&m).expect("dims match");
        let tr = n.trace();
        report.min_ratio = report.min_ratio.min(diff / tr);
        report.max_ratio = report.max_ratio.max(diff / tr);
        if diff < op.lambda * tr - ELLIPTICITY_SLACK || diff > op.big_lambda * tr + ELLIPTICITY_SLACK {
            report.violations += 1;
        }
    }
    report
}

/// Counts samples violating `M⁻(M) ≤ F(M) ≤ M⁺(M)` for Pucci operators built
/// from the constants of `op`.
pub fn check_pucci_ordering(op: &EllipticOperator, samples: usize, seed: u64) -> usize {
    let dim = op.dim().unwrap_or(2);
    let lower = EllipticOperator::pucci_minus(op.lambda, op.big_lambda).expect("valid constants");
    let upper = EllipticOperator::pucci_plus(op.lambda, op.big_lambda).expect("valid constants");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .filter(|_| {
            let m = random_symmetric(&mut rng, dim, 5.0);
            let f = op.eval(&m).expect("dims match");
            let lo = lower.eval(&m).expect("any dim");
            let hi = upper.eval(&m).expect("any dim");
            f < lo - ELLIPTICITY_SLACK || f > hi + ELLIPTICITY_SLACK
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainKind, Grid};
    use alloc::sync::Arc;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        let p = EllipticOperator::pucci_plus(1.0, 2.0).unwrap();
        assert_eq!(p.eval(&SymMatrix::scalar(3.0)).unwrap(), 6.0);
        assert_eq!(p.eval(&SymMatrix::scalar(-3.0)).unwrap(), -3.0);
        assert_eq!(p.eval(&SymMatrix::new2(1.0, 0.0, -1.0)).unwrap(), 1.0);
        let l = EllipticOperator::laplace();
        assert_eq!(l.eval(&SymMatrix::new2(2.0, 1.0, 3.0)).unwrap(), 5.0);
        let m = EllipticOperator::pucci_minus(1.0, 2.0).unwrap();
        assert_eq!(m.eval(&SymMatrix::new2(1.0, 0.0, -1.0)).unwrap(), -1.0);
    }

    #[test]
    fn every_member_vanishes_at_zero() {
        let b = EllipticOperator::bellman(vec![SymMatrix::identity(2), SymMatrix::new2(2.0, 0.0, 1.0)], None).unwrap();
        for op in [
            EllipticOperator::laplace(),
            EllipticOperator::pucci_plus(0.5, 3.0).unwrap(),
            EllipticOperator::pucci_minus(0.5, 3.0).unwrap(),
            b,
        ] {
            assert_eq!(op.eval(&SymMatrix::zeros(2)).unwrap(), 0.0);
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(EllipticOperator::pucci_plus(2.0, 1.0).is_err());
        assert!(EllipticOperator::pucci_plus(0.0, 1.0).is_err());
        assert!(EllipticOperator::bellman(vec![], None).is_err());
        assert!(EllipticOperator::bellman(vec![SymMatrix::new2(3.0, 0.0, 1.0)], Some((1.0, 2.0))).is_err());
        assert!(EllipticOperator::bellman(vec![SymMatrix::new2(1.0, 2.0, 1.0)], None).is_err());
        assert!(EllipticOperator::bellman(vec![SymMatrix::scalar(1.0), SymMatrix::identity(2)], None).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        let b = EllipticOperator::bellman(vec![SymMatrix::identity(2)], None).unwrap();
        assert!(matches!(b.eval(&SymMatrix::scalar(1.0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn linearization_reproduces_value() {
        let ops = [
            EllipticOperator::pucci_plus(1.0, 3.0).unwrap(),
            EllipticOperator::pucci_minus(1.0, 3.0).unwrap(),
            EllipticOperator::bellman(vec![SymMatrix::new2(1.0, 0.2, 2.0), SymMatrix::new2(2.0, -0.3, 1.0)], None).unwrap(),
        ];
        for op in &ops {
            for m in [SymMatrix::new2(1.0, 2.0, -3.0), SymMatrix::new2(-0.5, 0.1, 0.2), SymMatrix::new2(4.0, 0.0, 1.0)] {
                let (v, a) = op.linearize(&m).unwrap();
                assert_abs_diff_eq!(v, op.eval(&m).unwrap(), epsilon = 1e-12);
                assert_abs_diff_eq!(a.frobenius_dot(&m), v, epsilon = 1e-12);
                assert!(a.min_eigenvalue() >= op.lambda() - 1e-12);
                assert!(a.max_eigenvalue() <= op.big_lambda() + 1e-12);
            }
        }
    }

    #[test]
    fn hessian_is_exact_on_quadratics() {
        let g = Arc::new(Grid::new(1, 21, DomainKind::Box).unwrap());
        let u = GridFunction::from_fn(g.clone(), |p| p[0] * p[0]).unwrap();
        for &k in g.interior() {
            assert_abs_diff_eq!(discrete_hessian(&u, k).unwrap().xx(), 2.0, epsilon = 1e-10);
        }
        assert!(discrete_hessian(&u, 0).is_err());

        let g = Arc::new(Grid::new(2, 11, DomainKind::Box).unwrap());
        let u = GridFunction::from_fn(g.clone(), |p| p[0] * p[1]).unwrap();
        for &k in g.interior() {
            let m = discrete_hessian(&u, k).unwrap();
            assert_abs_diff_eq!(m.xy(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.xx(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hessian_of_quartic_matches_taylor_bound() {
        // u = x⁴, u'' = 12x², centered error h² u''''/12 = 2h² = 2e-4 at h = 0.01.
        let g = Arc::new(Grid::new(1, 201, DomainKind::Box).unwrap());
        let u = GridFunction::from_fn(g.clone(), |p| p[0].powi(4)).unwrap();
        let k = g.nearest_node([0.5, 0.0]).unwrap();
        let v = discrete_hessian(&u, k).unwrap().xx();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(v - 3.0, 2.0 * g.h() * g.h(), epsilon = 1e-9);
    }

    #[test]
    fn operator_field_examples() {
        let g = Arc::new(Grid::new(1, 11, DomainKind::Box).unwrap());
        let zero = GridFunction::zeros(g.clone());
        let f = apply_operator_field(&EllipticOperator::laplace(), &zero).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
        assert!(f.get(0).is_none());
        let sq = GridFunction::from_fn(g.clone(), |p| p[0] * p[0]).unwrap();
        let f = apply_operator_field(&EllipticOperator::laplace(), &sq).unwrap();
        assert!(f.present().all(|(_, v)| (v - 2.0).abs() < 1e-10));
        let neg = GridFunction::from_fn(g, |p| -p[0] * p[0]).unwrap();
        let f = apply_operator_field(&EllipticOperator::pucci_plus(1.0, 2.0).unwrap(), &neg).unwrap();
        assert!(f.present().all(|(_, v)| (v + 2.0).abs() < 1e-10));
    }

    #[test]
    fn rescaling_rejects_nonpositive_factor() {
        assert!(rescale_operator(&EllipticOperator::laplace(), 0.0).is_err());
        assert!(rescale_operator(&EllipticOperator::laplace(), -1.0).is_err());
    }

    #[test]
    fn laplace_ellipticity_ratio_is_one() {
        let r = check_ellipticity(&EllipticOperator::laplace(), 500, 7);
        assert_eq!(r.violations, 0);
        assert_abs_diff_eq!(r.min_ratio, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.max_ratio, 1.0, epsilon = 1e-12);
    }
}
