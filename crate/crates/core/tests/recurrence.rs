mod common;

use common::{c, chebyshev_u, natural_remainder, random_bounded_spec, rng};
use num_complex::Complex64;
use rand::Rng;
use tridiag_resolvent::recurrence::minimal_solution;
use tridiag_resolvent::{
    build_operator, casorati_residual, casorati_residual_p, eigen_series_test, evaluate_qp,
    growth_exponent, CoefficientSpec, DoubleDouble, Operator, OperatorDd, Verdict,
};

fn cheb() -> Operator {
    build_operator(&CoefficientSpec::chebyshev()).unwrap()
}

#[test]
fn chebyshev_q_matches_closed_form() {
    let m = cheb();
    for lam in [c(2.0, 0.0), c(0.3, 0.0), c(-1.5, 0.5), c(0.0, 3.0)] {
        let t = evaluate_qp(&m, lam, 60).unwrap();
        for n in 0..=60 {
            let want = chebyshev_u(n, lam);
            let got = (t.q(n) * t.h(n)).to_complex();
            assert!((got - want).norm() <= 1e-11 * want.norm().max(1.0), "n={n} lam={lam}");
        }
    }
}

#[test]
fn parity_zeros_at_origin() {
    let t = evaluate_qp(&cheb(), c(0.0, 0.0), 101).unwrap();
    for n in 0..=50 {
        assert!(t.p(2 * n).is_zero(), "P_{}", 2 * n);
        assert!(t.q(2 * n + 1).is_zero(), "Q_{}", 2 * n + 1);
    }
}

#[test]
fn no_overflow_at_large_n() {
    let t = evaluate_qp(&cheb(), c(50.0, 0.0), 5000).unwrap();
    assert!(t.q(5000).is_finite());
    let want = 5000.0 * (50.0 + (2499.0f64).sqrt()).ln();
    assert!((t.ln_qh(5000) - want).abs() < 1e-6 * want);
}

#[test]
fn double_double_agrees_with_f64() {
    let m: OperatorDd = build_operator(&CoefficientSpec::chebyshev()).unwrap();
    let lam = num_complex::Complex::new(DoubleDouble::splat(2.0), DoubleDouble::splat(0.0));
    let t = evaluate_qp(&m, lam, 64).unwrap();
    let z = 2.0 + 3f64.sqrt();
    assert!((growth_exponent(&t) - z).abs() / z < 0.01);
    let u = chebyshev_u(64, c(2.0, 0.0));
    let got = (t.q(64) * t.h(64)).to_complex();
    assert!(((got.re.hi() - u.re) / u.re).abs() < 1e-13);
}

#[test]
fn minimal_solution_is_the_chebyshev_remainder() {
    let t = evaluate_qp(&cheb(), c(2.0, 0.0), 128).unwrap();
    let f = minimal_solution(&t).expect("converges at lambda = 2");
    let z = 2.0 + 3f64.sqrt();
    for (n, v) in f.iter().enumerate() {
        // r_n h_n = 2 z^{-(n+1)}
        let want = (2.0f64).ln() - (n as f64 + 1.0) * z.ln();
        assert!(((*v * t.h(n)).ln_abs() - want).abs() < 1e-9, "n={n}");
    }
}

#[test]
fn chebyshev_at_one_grows_linearly() {
    let t = evaluate_qp(&cheb(), c(1.0, 0.0), 256).unwrap();
    let g = growth_exponent(&t);
    assert!(g > 1.0 && g < 1.05, "{g}");
}

fn max_casorati(model: &Operator, lam: Complex64, n: usize) -> f64 {
    let t = evaluate_qp(model, lam, n).unwrap();
    let rem = natural_remainder(&t);
    (1..=n).map(|k| casorati_residual(&t, &rem, k)).fold(0.0, f64::max)
}

#[test]
fn casorati_residual_builtin_models() {
    let points = [c(2.0, 0.0), c(0.5, 0.0), c(0.0, 1.0), c(-1.2, 0.3), c(0.0, 0.0)];
    for spec in [
        CoefficientSpec::chebyshev(),
        CoefficientSpec::perturbed_chebyshev(5.0),
        CoefficientSpec::period_two(),
    ] {
        let m: Operator = build_operator(&spec).unwrap();
        for lam in points {
            let res = max_casorati(&m, lam, 200);
            assert!(res <= 1e-8, "{spec:?} lam={lam} residual {res}");
        }
    }
}

#[test]
fn casorati_residual_random_models() {
    for seed in 0..20u64 {
        let m: Operator = build_operator(&random_bounded_spec(seed, 800)).unwrap();
        let mut r = rng(1000 + seed);
        for _ in 0..5 {
            let lam = c(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let res = max_casorati(&m, lam, 200);
            assert!(res <= 1e-8, "seed {seed} lam={lam} residual {res}");
        }
    }
}

#[test]
fn casorati_p_form_on_the_spectrum() {
    let t = evaluate_qp(&cheb(), c(0.5, 0.0), 200).unwrap();
    for k in 1..=200 {
        assert!(casorati_residual_p(&t, k) <= 1e-10);
    }
}

#[test]
fn series_test_on_the_perturbed_model() {
    let m: Operator = build_operator(&CoefficientSpec::perturbed_chebyshev(5.0)).unwrap();
    let v = eigen_series_test(&m, c(5.05, 0.0), 128).unwrap();
    assert_eq!(v.verdict, Verdict::Converges);
    let v = eigen_series_test(&m, c(5.55, 0.0), 128).unwrap();
    assert_eq!(v.verdict, Verdict::Diverges);
}

#[test]
fn zero_gamma_gives_minus_p() {
    let t = evaluate_qp(&cheb(), c(0.5, 0.2), 40).unwrap();
    let rem = tridiag_resolvent::evaluate_remainder(&t, c(0.0, 0.0));
    for n in 0..=40 {
        let diff = rem.r[n] + t.p(n);
        assert!(diff.is_zero() || diff.ln_abs() - t.p(n).ln_abs() < (1e-13f64).ln(), "n={n}");
    }
}

#[test]
fn wronskian_at_two_to_1e10() {
    let t = evaluate_qp(&cheb(), c(2.0, 0.0), 100).unwrap();
    let rem = tridiag_resolvent::evaluate_remainder(&t, c(2.0 * (2.0 - 3f64.sqrt()), 0.0));
    let w1 = t.q(0) * rem.r[1] - t.q(1) * rem.r[0];
    assert!((w1.to_complex() + 1.0).norm() < 1e-14);
    for n in 1..=100 {
        assert!(casorati_residual(&t, &rem, n) <= 1e-10, "n={n}");
    }
}
