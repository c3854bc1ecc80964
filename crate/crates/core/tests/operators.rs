use std::f64::consts::FRAC_2_SQRT_PI;

use fravar::fracgrid::{
    apply_adjoint, apply_adjoint_along_axis, apply_along_axis, apply_operator, build_operator,
    compose_order, make_grid, Axis, Field, Grid2D, LineOperator,
};
use fravar::fracops::{
    gamma, mrl_derivative, power_law_oracle, rl_integral, FractionalOrder, OperatorKind,
    ScalarFunction,
};
use proptest::prelude::*;

fn ord(v: f64) -> FractionalOrder {
    FractionalOrder::new(v).unwrap()
}

fn dense(op: &impl LineOperator, n: usize) -> Vec<Vec<f64>> {
    // column j is the image of e_j
    let mut m = vec![vec![0.0; n]; n];
    let mut e = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        op.apply_line(&e, &mut out);
        for i in 0..n {
            m[i][j] = out[i];
        }
    }
    m
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gamma_matches_statrs(x in -4.9f64..6.0) {
        prop_assume!((x - x.round()).abs() > 1e-3 || x > 0.5);
        let want = statrs::function::gamma::gamma(x);
        prop_assert!((gamma(x).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0), "{x}");
    }

    #[test]
    fn continuous_operators_match_the_power_law_oracle(
        gamma in 0.0f64..3.0,
        alpha in 0.05f64..=1.0,
        x in 0.05f64..2.0,
    ) {
        let a = ord(alpha);
        let f = ScalarFunction::new(0.0, 2.0, move |s: f64| s.powf(gamma)).unwrap();
        let want = power_law_oracle(gamma, a, x, OperatorKind::Integral).unwrap();
        let got = rl_integral(&f, a, x).unwrap();
        prop_assert!((got - want).abs() <= 1e-6, "I: γ={gamma} α={alpha} x={x}: {got} vs {want}");
        // the Caputo-form path differentiates f numerically and needs f'' bounded
        if gamma >= 2.0 || gamma == 0.0 {
            let want = power_law_oracle(gamma, a, x, OperatorKind::Derivative).unwrap();
            let smooth = ScalarFunction::smooth(0.0, 2.0, move |s: f64| s.powf(gamma)).unwrap();
            let got = mrl_derivative(&smooth, a, x).unwrap();
            prop_assert!((got - want).abs() <= 1e-6, "D: γ={gamma} α={alpha} x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn rough_derivative_path_matches_the_oracle(
        gamma in 0.0f64..3.0,
        alpha in 0.05f64..1.0,
        x in 0.05f64..2.0,
    ) {
        let a = ord(alpha);
        let f = ScalarFunction::new(0.0, 2.0, move |s: f64| s.powf(gamma)).unwrap();
        let want = power_law_oracle(gamma, a, x, OperatorKind::Derivative).unwrap();
        let got = mrl_derivative(&f, a, x).unwrap();
        prop_assert!((got - want).abs() <= 1e-6, "γ={gamma} α={alpha} x={x}: {got} vs {want}");
    }

    #[test]
    fn continuous_derivative_annihilates_constants(
        c in -100.0f64..100.0,
        alpha in 0.05f64..=1.0,
        x in 0.0f64..=1.0,
    ) {
        for f in [
            ScalarFunction::new(0.0, 1.0, move |_| c).unwrap(),
            ScalarFunction::smooth(0.0, 1.0, move |_| c).unwrap(),
        ] {
            prop_assert!(mrl_derivative(&f, ord(alpha), x).unwrap().abs() <= 1e-8);
        }
    }

    #[test]
    fn translation_covariance(
        shift in -3.0f64..3.0,
        alpha in 0.1f64..0.95,
        x in 0.1f64..1.0,
    ) {
        // D on [a, a+1] of g(s - a) equals D on [0, 1] of g at the shifted point
        let g = |s: f64| (1.3 * s).sin() + s * s;
        let base = ScalarFunction::smooth(0.0, 1.0, g).unwrap();
        let moved = ScalarFunction::smooth(shift, shift + 1.0, move |s| g(s - shift)).unwrap();
        let a = ord(alpha);
        let d0 = mrl_derivative(&base, a, x).unwrap();
        let d1 = mrl_derivative(&moved, a, x + shift).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-7, "{d0} vs {d1}");
        let i0 = rl_integral(&base, a, x).unwrap();
        let i1 = rl_integral(&moved, a, x + shift).unwrap();
        prop_assert!((i0 - i1).abs() <= 1e-7, "{i0} vs {i1}");
    }

    #[test]
    fn discrete_derivative_annihilates_constants_exactly(
        c in -1e3f64..1e3,
        alpha in 0.05f64..=1.0,
        n in 2usize..200,
        k in 1usize..=4,
    ) {
        let g = make_grid(0.0, 1.0, n).unwrap();
        let op = build_operator(ord(alpha), OperatorKind::Derivative, g);
        let p = compose_order(&op, k).unwrap();
        let out = apply_operator(&p, &Field::constant(g, c).unwrap()).unwrap();
        prop_assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn adjoint_identity(
        alpha in 0.05f64..=1.0,
        n in 2usize..=256,
        seed in any::<u64>(),
        derivative in any::<bool>(),
    ) {
        let g = make_grid(0.0, 1.0, n).unwrap();
        let kind = if derivative { OperatorKind::Derivative } else { OperatorKind::Integral };
        let op = build_operator(ord(alpha), kind, g);
        let s = seed as f64 / u64::MAX as f64;
        let f = Field::sample_line(g, |x| (7.0 * x + s).sin() + s).unwrap();
        let h = Field::sample_line(g, |x| (3.0 * x * x - s).cos()).unwrap();
        let lhs = apply_operator(&op, &f).unwrap().dot(&h).unwrap();
        let rhs = f.dot(&apply_adjoint(&op, &h).unwrap()).unwrap();
        prop_assert!(close_rel(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn causality(alpha in 0.05f64..=1.0, n in 4usize..100, i in 0usize..100, bump in -5.0f64..5.0) {
        let g = make_grid(0.0, 1.0, n).unwrap();
        let i = i % n;
        let op = build_operator(ord(alpha), OperatorKind::Derivative, g);
        let f = Field::sample_line(g, |x| x.exp()).unwrap();
        let mut v = f.values().to_vec();
        for x in v.iter_mut().skip(i + 1) {
            *x += bump;
        }
        let a = apply_operator(&op, &f).unwrap();
        let b = apply_operator(&op, &Field::new(g, v).unwrap()).unwrap();
        prop_assert_eq!(&a.values()[..=i], &b.values()[..=i]);
    }

    #[test]
    fn linearity(alpha in 0.05f64..=1.0, p in -3.0f64..3.0, q in -3.0f64..3.0) {
        let g = make_grid(0.0, 1.0, 64).unwrap();
        let op = build_operator(ord(alpha), OperatorKind::Derivative, g);
        let f = Field::sample_line(g, |x| x.sin()).unwrap();
        let h = Field::sample_line(g, |x| x * x * x).unwrap();
        let combo = f.zip_with(&h, |a, b| p * a + q * b).unwrap();
        let lhs = apply_operator(&op, &combo).unwrap();
        let df = apply_operator(&op, &f).unwrap();
        let dh = apply_operator(&op, &h).unwrap();
        for k in 0..lhs.len() {
            let want = p * df.values()[k] + q * dh.values()[k];
            prop_assert!((lhs.values()[k] - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn axis_applications_commute(alpha in 0.1f64..=1.0, beta in 0.1f64..=1.0, seed in 0.0f64..1.0) {
        let g = Grid2D::new(make_grid(0.0, 1.0, 12).unwrap(), make_grid(-1.0, 1.0, 9).unwrap());
        let f = Field::sample_plane(g, |t, x| (t * 3.0 + seed).sin() * (x - seed).exp()).unwrap();
        let dt = build_operator(ord(alpha), OperatorKind::Derivative, g.t);
        let dx = build_operator(ord(beta), OperatorKind::Derivative, g.x);
        let tx = apply_along_axis(&dx, &apply_along_axis(&dt, &f, Axis::T).unwrap(), Axis::X).unwrap();
        let xt = apply_along_axis(&dt, &apply_along_axis(&dx, &f, Axis::X).unwrap(), Axis::T).unwrap();
        for (a, b) in tx.values().iter().zip(xt.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn first_order_convergence_on_the_square() {
    let a = ord(0.5);
    let want = power_law_oracle(2.0, a, 1.0, OperatorKind::Derivative).unwrap();
    let err = |n: usize| {
        let g = make_grid(0.0, 1.0, n).unwrap();
        let op = build_operator(a, OperatorKind::Derivative, g);
        let d = apply_operator(&op, &Field::sample_line(g, |x| x * x).unwrap()).unwrap();
        (d.values()[n] - want).abs()
    };
    let ratio = err(512) / err(1024);
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn identity_derivative_at_resolution() {
    let g = make_grid(0.0, 1.0, 1024).unwrap();
    let op = build_operator(ord(0.5), OperatorKind::Derivative, g);
    let d = apply_operator(&op, &Field::sample_line(g, |x| x).unwrap()).unwrap();
    assert!((d.values()[1024] - FRAC_2_SQRT_PI).abs() < 5e-3);
}

#[test]
fn adjoint_matches_the_dense_transpose() {
    let n = 65;
    let g = make_grid(0.0, 1.0, n - 1).unwrap();
    for kind in [OperatorKind::Derivative, OperatorKind::Integral] {
        let op = build_operator(ord(0.5), kind, g);
        let m = dense(&op, n);
        let f = Field::sample_line(g, |x| (5.0 * x).cos() + x).unwrap();
        let got = apply_adjoint(&op, &f).unwrap();
        let mt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect();
        for (a, b) in got.values().iter().zip(matvec(&mt, f.values())) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn classical_adjoint_is_a_forward_difference() {
    let g = make_grid(0.0, 1.0, 8).unwrap();
    let op = build_operator(ord(1.0), OperatorKind::Derivative, g);
    let f = Field::sample_line(g, |x| x * x).unwrap();
    let adj = apply_adjoint(&op, &f).unwrap();
    let h = g.h();
    let v = f.values();
    // interior rows: (f_i - f_{i+1}) / h
    for i in 1..8 {
        assert!((adj.values()[i] - (v[i] - v[i + 1]) / h).abs() < 1e-12);
    }
}

#[test]
fn composition_matches_the_matrix_power() {
    let n = 41;
    let g = make_grid(0.0, 1.0, n - 1).unwrap();
    let op = build_operator(ord(1.0 / 3.0), OperatorKind::Derivative, g);
    let m = dense(&op, n);
    let m3 = matmul(&matmul(&m, &m), &m);
    let f = Field::sample_line(g, |x| x.exp() * x).unwrap();
    let got = apply_operator(&compose_order(&op, 3).unwrap(), &f).unwrap();
    for (a, b) in got.values().iter().zip(matvec(&m3, f.values())) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
    // the composed pipeline's adjoint is the adjoint chain
    let h = Field::sample_line(g, |x| 1.0 - x).unwrap();
    let p = compose_order(&op, 3).unwrap();
    let lhs = apply_operator(&p, &f).unwrap().dot(&h).unwrap();
    let rhs = f.dot(&apply_adjoint(&p, &h).unwrap()).unwrap();
    assert!(close_rel(lhs, rhs, 1e-12));
}

#[test]
fn half_order_twice_approaches_the_first_derivative() {
    let g = make_grid(0.0, 1.0, 2048).unwrap();
    let op = build_operator(ord(0.5), OperatorKind::Derivative, g);
    let f = Field::sample_line(g, |x| x * x).unwrap();
    let d = apply_operator(&compose_order(&op, 2).unwrap(), &f).unwrap();
    for (i, v) in d.values().iter().enumerate().skip(1) {
        let x = g.node(i);
        assert!((v - 2.0 * x).abs() < 5e-2, "x={x}: {v}");
    }
}

#[test]
fn integral_undoes_the_derivative() {
    let g = make_grid(0.0, 1.0, 1024).unwrap();
    let a = ord(0.5);
    let d = build_operator(a, OperatorKind::Derivative, g);
    let i = build_operator(a, OperatorKind::Integral, g);
    let f = Field::sample_line(g, |x| x.powf(1.5)).unwrap();
    let back = apply_operator(&i, &apply_operator(&d, &f).unwrap()).unwrap();
    for (b, x) in back.values().iter().zip(g.nodes()) {
        assert!((b - x.powf(1.5)).abs() < 1e-3, "x={x}: {b}");
    }
}

#[test]
fn line_by_line_agrees_with_the_oracle() {
    let g = Grid2D::new(
        make_grid(0.0, 1.0, 1024).unwrap(),
        make_grid(0.0, 2.0, 4).unwrap(),
    );
    let op = build_operator(ord(0.5), OperatorKind::Derivative, g.t);
    let d = apply_along_axis(&op, &Field::sample_plane(g, |t, x| t * x).unwrap(), Axis::T).unwrap();
    for j in 0..=4 {
        let x = g.x.node(j);
        assert!((d.at(1024, j) - FRAC_2_SQRT_PI * x).abs() < 5e-3 * x.max(1.0));
    }
    let cx = build_operator(ord(0.5), OperatorKind::Derivative, g.x);
    let f = Field::sample_plane(g, |t, _| t.sin()).unwrap();
    assert!(apply_along_axis(&cx, &f, Axis::X)
        .unwrap()
        .values()
        .iter()
        .all(|v| *v == 0.0));
    let back = apply_adjoint_along_axis(&cx, &f, Axis::X).unwrap();
    assert_eq!(back.len(), f.len());
}
