use std::sync::Arc;

use obstacle_core::expr::{parse, BinOp, Env, Expr, Func, Var};
use obstacle_core::numerics::{clipped_residual, projected_sor, solve_linear, CsrMatrix};
use obstacle_core::operators::discrete_hessian;
use obstacle_core::penalty::PenaltyFamily;
use obstacle_core::{DomainKind, EllipticOperator, Grid, GridFunction, SolverParams, SymMatrix};
use proptest::prelude::*;

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..1e3).prop_map(Expr::Num),
        (0u32..20).prop_map(|k| Expr::Num(k as f64)),
        prop_oneof![Just(Var::X), Just(Var::Y), Just(Var::T)].prop_map(Expr::Var),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let unary = prop_oneof![Just(Func::Abs), Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Sqrt)];
        let binary = prop_oneof![Just(Func::Min), Just(Func::Max)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (unary, inner.clone()).prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (binary, inner.clone(), inner).prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
        ]
    })
}

fn depth(e: &Expr) -> usize {
    match e {
        Expr::Num(_) | Expr::Var(_) => 0,
        Expr::Neg(a) => 1 + depth(a),
        Expr::Bin(_, a, b) => 1 + depth(a).max(depth(b)),
        Expr::Call(_, args) => 1 + args.iter().map(depth).max().unwrap_or(0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_print_is_stable(e in expr_tree()) {
        prop_assume!(depth(&e) <= 6);
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        prop_assert_eq!(reparsed.to_string(), printed);
        prop_assert_eq!(reparsed, e);
    }

    #[test]
    fn eval_is_deterministic(e in expr_tree(), x in -1.0f64..1.0, y in -1.0f64..1.0, t in -1.0f64..1.0) {
        let env = Env::space_time(x, y, t);
        match (e.eval(&env), e.eval(&env)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "eval changed outcome"),
        }
    }
}

fn grid1(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(1, n, DomainKind::Box).unwrap())
}

proptest! {
    #[test]
    fn sup_norm_is_a_norm(
        f in prop::collection::vec(-1e3f64..1e3, 21),
        g in prop::collection::vec(-1e3f64..1e3, 21),
        c in -50.0f64..50.0,
    ) {
        let grid = grid1(21);
        let f = GridFunction::new(grid.clone(), f).unwrap();
        let g = GridFunction::new(grid, g).unwrap();
        prop_assert_eq!(f.map(|v| c * v).unwrap().sup_norm(), c.abs() * f.sup_norm());
        prop_assert!(f.zip_map(&g, |a, b| a + b).unwrap().sup_norm() <= f.sup_norm() + g.sup_norm());
    }

    #[test]
    fn balls_are_nested(x in -1.0f64..1.0, y in -1.0f64..1.0, r1 in 0.0f64..1.5, dr in 0.0f64..1.0) {
        let grid = Grid::new(2, 21, DomainKind::Disc).unwrap();
        let small = grid.ball_nodes([x, y], r1);
        let large = grid.ball_nodes([x, y], r1 + dr);
        prop_assert!(small.iter().all(|k| large.binary_search(k).is_ok()));
    }

    #[test]
    fn modulus_is_monotone_and_subadditive(a in 0.5f64..3.0, r1 in 0.05f64..0.8, r2 in 0.05f64..0.8) {
        let grid = grid1(101);
        let f = GridFunction::from_fn(grid.clone(), |p| (a * p[0]).sin()).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let w = f.modulus_of_continuity(&[lo, hi, r1 + r2]).unwrap();
        prop_assert!(w[0].1 <= w[1].1);
        // ω(r₁ + r₂) ≤ ω(r₁) + ω(r₂) + 2·Lip·h
        prop_assert!(w[2].1 <= w[0].1 + w[1].1 + 2.0 * a * grid.h() + 1e-12);
    }
}

fn sym2() -> impl Strategy<Value = SymMatrix> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b, c)| SymMatrix::new2(a, b, c))
}

fn psd2() -> impl Strategy<Value = SymMatrix> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
        .prop_map(|(a, b, c, d)| SymMatrix::new2(a * a + c * c, a * b + c * d, b * b + d * d))
}

fn rotation(theta: f64, l1: f64, l2: f64) -> SymMatrix {
    let (s, c) = theta.sin_cos();
    SymMatrix::new2(l1 * c * c + l2 * s * s, (l1 - l2) * s * c, l1 * s * s + l2 * c * c)
}

fn catalog() -> Vec<EllipticOperator> {
    vec![
        EllipticOperator::laplace(),
        EllipticOperator::pucci_minus(1.0, 2.0).unwrap(),
        EllipticOperator::pucci_plus(0.5, 3.0).unwrap(),
        EllipticOperator::bellman(vec![rotation(0.3, 1.0, 2.0), rotation(1.2, 1.5, 1.0), SymMatrix::identity(2)], None)
            .unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn operators_are_degenerate_elliptic(m in sym2(), n in psd2()) {
        for op in catalog() {
            let a = op.eval(&m).unwrap();
            let b = op.eval(&m.add(&n)).unwrap();
            prop_assert!(b >= a - 1e-12 * (1.0 + a.abs()), "{}: {a} > {b}", op.name());
        }
    }

    #[test]
    fn operators_are_positively_homogeneous(m in sym2(), c in 1e-3f64..1e3) {
        for op in catalog() {
            let a = op.eval(&m.scale(c)).unwrap();
            let b = c * op.eval(&m).unwrap();
            // relative to the size of the terms, since F(M) itself may cancel
            let scale = c * op.big_lambda() * (m.xx().abs() + 2.0 * m.xy().abs() + m.yy().abs());
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{}: {a} vs {b}", op.name());
        }
    }

    #[test]
    fn bellman_sits_between_pucci_extremes(
        m in sym2(),
        members in prop::collection::vec((0.0f64..3.2, 1.0f64..2.0, 1.0f64..2.0), 1..5),
    ) {
        let family: Vec<SymMatrix> = members.iter().map(|&(t, a, b)| rotation(t, a, b)).collect();
        let bellman = EllipticOperator::bellman(family, Some((1.0, 2.0))).unwrap();
        let lo = EllipticOperator::pucci_minus(1.0, 2.0).unwrap().eval(&m).unwrap();
        let mid = bellman.eval(&m).unwrap();
        let hi = EllipticOperator::pucci_plus(1.0, 2.0).unwrap().eval(&m).unwrap();
        prop_assert!(lo <= mid + 1e-10 && mid <= hi + 1e-10, "{lo} {mid} {hi}");
    }

    #[test]
    fn discrete_hessian_is_exact_on_quadratics(c in prop::array::uniform6(-1.0f64..1.0), i in 1usize..20, j in 1usize..20) {
        let grid = Arc::new(Grid::new(2, 21, DomainKind::Box).unwrap());
        let u = GridFunction::from_fn(grid.clone(), |p| {
            let (x, y) = (p[0], p[1]);
            c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
        })
        .unwrap();
        let node = grid.node_at(i as isize, j as isize).unwrap();
        let hess = discrete_hessian(&u, node).unwrap();
        prop_assert!((hess.xx() - 2.0 * c[3]).abs() <= 1e-12);
        prop_assert!((hess.xy() - c[4]).abs() <= 1e-12);
        prop_assert!((hess.yy() - 2.0 * c[5]).abs() <= 1e-12);
    }
}

const EPSILONS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn beta_family_properties(
        c_index in 0usize..2,
        e_index in 0usize..5,
        s in prop::collection::vec(-1.0f64..1.0, 1000),
    ) {
        let c = [1.0, 33.0][c_index];
        let eps = EPSILONS[e_index];
        let fam = PenaltyFamily::new(c, eps).unwrap();
        prop_assert_eq!(fam.beta(0.0), -c);
        for &s in &s {
            let v = fam.beta_raw(s);
            // strictly increasing where the exponential does not underflow
            let next = fam.beta_raw(s + eps * 1e-3);
            if v.abs() > 1e-200 && v.is_finite() {
                prop_assert!(next > v);
            }
            if s > 0.0 {
                prop_assert!((-c..=c).contains(&fam.beta(s)));
            }
            // pointwise limits: shrinking ε moves β toward 0 above the
            // obstacle and toward -∞ below it
            if e_index + 1 < EPSILONS.len() {
                let finer = PenaltyFamily::new(c, EPSILONS[e_index + 1]).unwrap();
                if s > 0.0 {
                    prop_assert!(finer.beta(s).abs() <= fam.beta(s).abs());
                } else if s < 0.0 {
                    prop_assert!(finer.beta(s) <= fam.beta(s));
                }
            }
            let expected = -c * (-s / eps).exp();
            if expected.is_finite() {
                prop_assert!((v - expected).abs() <= 1e-12 * expected.abs());
            } else {
                prop_assert_eq!(v, expected);
                prop_assert_eq!(fam.beta(s), -fam.clamp());
            }
        }
    }
}

/// Symmetric, strictly diagonally dominant, nonpositive off-diagonals.
fn m_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..16).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n).prop_map(move |w| {
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..i {
                    // sparse-ish coupling
                    let v = if w[i][j] > 0.5 { -w[j][i] } else { 0.0 };
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            for i in 0..n {
                let off: f64 = a[i].iter().map(|v| v.abs()).sum();
                a[i][i] = off + 0.5 + w[i][i];
            }
            a
        })
    })
}

fn dense_residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(row, bi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() - bi)
        .collect()
}

proptest! {
    #[test]
    fn linear_residual_is_reported_faithfully(a in m_matrix(), seed in prop::collection::vec(-5.0f64..5.0, 16)) {
        let n = a.len();
        let b = &seed[..n];
        let params = SolverParams::default();
        let sol = solve_linear(&CsrMatrix::from_dense(&a), b, &params).unwrap();
        let recomputed = dense_residual(&a, &sol.x, b).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        prop_assert!((sol.residual - recomputed).abs() <= 1e-14);
        prop_assert!(recomputed <= params.tol_linear * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn projected_sor_solves_the_three_case_system(
        a in m_matrix(),
        b in prop::collection::vec(-5.0f64..5.0, 16),
        bounds in prop::collection::vec((-1.0f64..0.0, 0.0f64..1.0), 16),
    ) {
        let n = a.len();
        let b = &b[..n];
        let lo: Vec<f64> = bounds[..n].iter().map(|p| p.0).collect();
        let hi: Vec<f64> = bounds[..n].iter().map(|p| p.1).collect();
        let params = SolverParams::default();
        let m = CsrMatrix::from_dense(&a);
        let sol = projected_sor(&m, b, &lo, &hi, &params).unwrap();
        let tol = params.tol_nonlinear;
        let r = dense_residual(&a, &sol.x, b);
        for i in 0..n {
            let x = sol.x[i];
            let ok = (x == lo[i] && r[i] >= -tol) || (x == hi[i] && r[i] <= tol) || (lo[i] < x && x < hi[i] && r[i].abs() <= tol);
            prop_assert!(ok, "index {i}: x = {x} in [{}, {}], r = {}", lo[i], hi[i], r[i]);
        }
        let again = projected_sor(&m, b, &lo, &hi, &params).unwrap();
        prop_assert!(sol.x.iter().zip(&again.x).all(|(p, q)| p.to_bits() == q.to_bits()));
        let clipped = clipped_residual(&m, b, &lo, &hi, &sol.x);
        prop_assert!(clipped.iter().all(|v| v.abs() <= tol));
    }
}
